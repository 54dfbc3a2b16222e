#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "sitsr/errors.hpp"

namespace sitsr::nn {

/// Dense row-major tensor of rank <= 4. Shapes follow the [N, C, H, W]
/// convention where N is the frame/batch axis.
template <class S>
struct TensorT {
  std::vector<int> shape;
  std::vector<S> v;

  TensorT() = default;
  explicit TensorT(std::vector<int> sh) : shape(std::move(sh)) {
    v.assign(static_cast<size_t>(numel_of(shape)), S(0));
  }
  TensorT(std::vector<int> sh, std::vector<S> data) : shape(std::move(sh)), v(std::move(data)) {
    if (static_cast<int64_t>(v.size()) != numel_of(shape))
      throw DomainError("tensor: data size does not match shape");
  }

  static int64_t numel_of(const std::vector<int>& sh) {
    int64_t n = 1;
    for (int d : sh) n *= d;
    return n;
  }

  int64_t numel() const { return static_cast<int64_t>(v.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }

  S* data() { return v.data(); }
  const S* data() const { return v.data(); }

  S& operator[](int64_t i) { return v[static_cast<size_t>(i)]; }
  S operator[](int64_t i) const { return v[static_cast<size_t>(i)]; }

  /// Same storage reinterpreted under a new shape (sizes must agree).
  TensorT reshaped(std::vector<int> sh) const {
    if (numel_of(sh) != numel()) throw DomainError("tensor: reshape size mismatch");
    TensorT out;
    out.shape = std::move(sh);
    out.v = v;
    return out;
  }

  void fill(S x) { std::fill(v.begin(), v.end(), x); }

  template <class T2>
  TensorT<T2> cast() const {
    TensorT<T2> out;
    out.shape = shape;
    out.v.resize(v.size());
    for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<T2>(v[i]);
    return out;
  }
};

using Tensor = TensorT<float>;

}  // namespace sitsr::nn
