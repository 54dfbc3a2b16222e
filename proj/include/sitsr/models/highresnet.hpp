#pragma once

#include <string>
#include <vector>

#include "sitsr/nn/modules.hpp"

namespace sitsr {

/// HighRes-net per-frame encoder: each LR frame is channel-concatenated with
/// the shared median reference and pushed through a small conv stack.
/// Input [T, 2*in_ch, H, W] -> hidden states [T, c_f, H, W].
template <class S>
class HighResEncoder {
 public:
  HighResEncoder() = default;

  HighResEncoder(nn::ParamSet<S>& ps, Rng& rng, const std::string& prefix, int in_ch, int c_f,
                 int layers) {
    if (layers < 1) throw ConfigError("highresnet: encoder needs at least one layer");
    int cin = 2 * in_ch;
    for (int i = 0; i < layers; ++i) {
      convs_.push_back(nn::make_conv(ps, rng, prefix + ".enc" + std::to_string(i), cin, c_f, 3));
      cin = c_f;
    }
  }

  nn::Var forward(nn::Tape<S>& t, nn::Var frames_with_ref) const {
    nn::Var cur = frames_with_ref;
    for (const auto& c : convs_) cur = t.leaky_relu(c(t, cur), S(0.2));
    return cur;
  }

 private:
  std::vector<nn::Conv2d<S>> convs_;
};

}  // namespace sitsr
