#pragma once

#include <string>
#include <vector>

#include "sitsr/nn/modules.hpp"

namespace sitsr {

enum class Upsampler { pixelshuffle, transposed };

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// Maps a fused feature map to the RGB output at scale x the input size via
/// log2(scale) x2 upsampling stages and a final 3x3 convolution. The scale
/// must be a power of two in {2,4,8}.
template <class S>
class Decoder {
 public:
  Decoder() = default;

  Decoder(nn::ParamSet<S>& ps, Rng& rng, const std::string& prefix, int c_in, int c_mid,
          int out_ch, int scale, Upsampler up)
      : up_(up) {
    if (scale < 2 || scale > 8 || !is_power_of_two(scale))
      throw ConfigError("decoder: scale must be one of {2,4,8}");
    int stages = 0;
    for (int s = scale; s > 1; s /= 2) ++stages;
    int cin = c_in;
    for (int i = 0; i < stages; ++i) {
      if (up == Upsampler::pixelshuffle) {
        stage_convs_.push_back(
            nn::make_conv(ps, rng, prefix + ".up" + std::to_string(i), cin, 4 * c_mid, 3));
      } else {
        stage_tconvs_.push_back(
            nn::make_conv_transpose(ps, rng, prefix + ".up" + std::to_string(i), cin, c_mid));
      }
      cin = c_mid;
    }
    conv_last_ = nn::make_conv(ps, rng, prefix + ".conv_last", c_mid, out_ch, 3);
  }

  nn::Var forward(nn::Tape<S>& t, nn::Var fused) const {
    nn::Var cur = fused;
    const size_t stages =
        up_ == Upsampler::pixelshuffle ? stage_convs_.size() : stage_tconvs_.size();
    for (size_t i = 0; i < stages; ++i) {
      if (up_ == Upsampler::pixelshuffle)
        cur = t.pixel_shuffle2(stage_convs_[i](t, cur));
      else
        cur = stage_tconvs_[i](t, cur);
      cur = t.leaky_relu(cur, S(0.2));
    }
    return conv_last_(t, cur);
  }

 private:
  Upsampler up_ = Upsampler::pixelshuffle;
  std::vector<nn::Conv2d<S>> stage_convs_;
  std::vector<nn::ConvTranspose2d<S>> stage_tconvs_;
  nn::Conv2d<S> conv_last_;
};

}  // namespace sitsr
