#pragma once

#include <vector>

#include "sitsr/core/timestamp.hpp"
#include "sitsr/nn/tensor.hpp"

namespace sitsr {

/// Configuration of the sinusoidal date encodings and the attention heads
/// consuming them. The per-head encoding dimension is d = c_e / heads.
struct EncodingConfig {
  double tau = 1000.0;
  int c_e = 64;
  int heads = 4;

  int per_head_dim() const { return c_e / heads; }
  void validate() const;
};

/// T x d matrix, one row per frame; every entry is a sine, so values lie
/// in [-1, 1].
struct PositionalEncoding {
  int rows = 0;
  int cols = 0;
  std::vector<float> v;

  float at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }

  template <class S>
  nn::TensorT<S> as_tensor() const {
    nn::TensorT<S> out({rows, cols});
    for (size_t i = 0; i < v.size(); ++i) out[static_cast<int64_t>(i)] = static_cast<S>(v[i]);
    return out;
  }
};

/// Day-of-sequence encoding: row k holds sin(day(t_k) / tau^(i/d)) for
/// i = 1..d, where day(t_k) counts days since the earliest frame. Editing
/// the series start shifts every other row (the known drawback).
PositionalEncoding absolute_encoding(const std::vector<Timestamp>& timestamps,
                                     const EncodingConfig& cfg);

/// Reference-relative encoding: row k holds sin((t_k - t_ref) / tau^(i/d)).
/// Signed day differences make the encoding invariant to global time shifts
/// and to adding/removing other frames.
PositionalEncoding relative_encoding(const std::vector<Timestamp>& timestamps,
                                     Timestamp t_ref, const EncodingConfig& cfg);

}  // namespace sitsr
