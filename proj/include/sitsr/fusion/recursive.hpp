#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "sitsr/errors.hpp"
#include "sitsr/nn/modules.hpp"

namespace sitsr {

/// Frame indices used to pad a series of length t up to the next power of
/// two: the temporally closest frames to the reference are repeated, ties
/// broken toward earlier dates (then lower index). gaps_days[k] is
/// |t_k - t_ref| and signed_days[k] is t_k - t_ref for tie-breaking.
std::vector<int> recursive_padding_indices(const std::vector<int64_t>& gaps_days,
                                           const std::vector<int64_t>& signed_days);

inline int next_power_of_two(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// HighRes-net style recursive fusion: states are paired (first half with
/// second half) and squeezed through a shared learned 2-input block until a
/// single state remains. Order-sensitive by design.
template <class S>
class RecursiveFusion {
 public:
  RecursiveFusion() = default;

  RecursiveFusion(nn::ParamSet<S>& ps, Rng& rng, const std::string& prefix, int c_f)
      : c_f_(c_f) {
    conv1_ = nn::make_conv(ps, rng, prefix + ".fuse1", 2 * c_f, c_f, 3);
    conv2_ = nn::make_conv(ps, rng, prefix + ".fuse2", c_f, c_f, 3);
  }

  /// states: [T, C_f, H, W]. gaps/signed gaps drive the padding policy.
  nn::Var forward(nn::Tape<S>& t, nn::Var states, const std::vector<int64_t>& gaps_days,
                  const std::vector<int64_t>& signed_days) const {
    const auto& sv = t.val(states);
    if (sv.rank() != 4) throw DomainError("recursive_fuse: states must be [T,C,H,W]");
    const int frames = sv.dim(0);
    if (frames < 1) throw DomainError("recursive_fuse: empty state list");
    if (static_cast<int>(gaps_days.size()) != frames)
      throw DomainError("recursive_fuse: gap list length mismatch");

    nn::Var cur = states;
    const int target = next_power_of_two(frames);
    if (target != frames) {
      const auto pad = recursive_padding_indices(gaps_days, signed_days);
      std::vector<int> idx(static_cast<size_t>(frames));
      for (int i = 0; i < frames; ++i) idx[static_cast<size_t>(i)] = i;
      for (int i = 0; i < target - frames; ++i)
        idx.push_back(pad[static_cast<size_t>(i) % pad.size()]);
      cur = t.gather_frames(states, idx);
    }

    int n = target;
    while (n > 1) {
      const int half = n / 2;
      std::vector<int> lo(static_cast<size_t>(half)), hi(static_cast<size_t>(half));
      for (int i = 0; i < half; ++i) {
        lo[static_cast<size_t>(i)] = i;
        hi[static_cast<size_t>(i)] = i + half;
      }
      const nn::Var a = t.gather_frames(cur, lo);
      const nn::Var b = t.gather_frames(cur, hi);
      const nn::Var pair = t.concat({a, b});
      const nn::Var f = conv2_(t, t.leaky_relu(conv1_(t, pair), S(0.2)));
      // Residual around the pair mean keeps early training stable.
      cur = t.add(t.scale(t.add(a, b), S(0.5)), f);
      n = half;
    }
    return cur;  // [1, C_f, H, W]
  }

 private:
  int c_f_ = 0;
  nn::Conv2d<S> conv1_, conv2_;
};

}  // namespace sitsr
