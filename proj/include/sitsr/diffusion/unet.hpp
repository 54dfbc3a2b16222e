#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sitsr/nn/modules.hpp"

namespace sitsr {

/// Sinusoidal embedding of the diffusion step index, dimension dim (even).
template <class S>
nn::TensorT<S> timestep_embedding(int t, int dim) {
  nn::TensorT<S> out({1, dim});
  const int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    out[i] = static_cast<S>(std::sin(t * freq));
    out[half + i] = static_cast<S>(std::cos(t * freq));
  }
  return out;
}

/// Small conditional U-Net over three resolutions. The conditioner feature
/// map is channel-concatenated with the noisy input at full resolution; the
/// step embedding enters every residual block as a per-channel bias.
template <class S>
class NoisePredictor {
 public:
  static constexpr int kTimeDim = 32;

  NoisePredictor() = default;

  NoisePredictor(nn::ParamSet<S>& ps, Rng& rng, const std::string& prefix, int cond_channels,
                 int base_channels, int out_channels = 3)
      : cond_ch_(cond_channels), base_(base_channels) {
    const int c = base_channels, c2 = 2 * base_channels;
    temb1_ = nn::make_linear(ps, rng, prefix + ".temb1", kTimeDim, 2 * c2);
    temb2_ = nn::make_linear(ps, rng, prefix + ".temb2", 2 * c2, 2 * c2);
    conv_in_ = nn::make_conv(ps, rng, prefix + ".conv_in", out_channels + cond_channels, c, 3);
    blk_d0_ = Block(ps, rng, prefix + ".d0", c, c, 2 * c2);
    down0_ = nn::make_conv(ps, rng, prefix + ".down0", c, c2, 3, 2);
    blk_d1_ = Block(ps, rng, prefix + ".d1", c2, c2, 2 * c2);
    down1_ = nn::make_conv(ps, rng, prefix + ".down1", c2, c2, 3, 2);
    blk_mid_ = Block(ps, rng, prefix + ".mid", c2, c2, 2 * c2);
    up1_ = nn::make_conv(ps, rng, prefix + ".up1", c2, c2, 3);
    blk_u1_ = Block(ps, rng, prefix + ".u1", 2 * c2, c2, 2 * c2);
    up0_ = nn::make_conv(ps, rng, prefix + ".up0", c2, c, 3);
    blk_u0_ = Block(ps, rng, prefix + ".u0", 2 * c, c, 2 * c2);
    conv_out_ = nn::make_conv(ps, rng, prefix + ".conv_out", c, out_channels, 3);
    // Zero-initialized head: the untrained predictor outputs zero noise.
    conv_out_.w->value.fill(S(0));
  }

  /// x_t and cond are [1,C,H,W] with H, W divisible by 4.
  nn::Var forward(nn::Tape<S>& t, nn::Var x_t, nn::Var cond, int step) const {
    const nn::Var temb_in = t.input(timestep_embedding<S>(step, kTimeDim));
    const nn::Var temb = temb2_(t, t.silu(temb1_(t, temb_in)));

    const nn::Var h0 = conv_in_(t, t.concat({x_t, cond}));
    const nn::Var d0 = blk_d0_.forward(t, h0, temb);
    const nn::Var d1 = blk_d1_.forward(t, t.silu(down0_(t, d0)), temb);
    const nn::Var mid = blk_mid_.forward(t, t.silu(down1_(t, d1)), temb);
    nn::Var u = t.silu(up1_(t, t.nearest_up2(mid)));
    u = blk_u1_.forward(t, t.concat({u, d1}), temb);
    u = t.silu(up0_(t, t.nearest_up2(u)));
    u = blk_u0_.forward(t, t.concat({u, d0}), temb);
    return conv_out_(t, u);
  }

  int cond_channels() const { return cond_ch_; }
  int base_channels() const { return base_; }

 private:
  struct Block {
    nn::Conv2d<S> conv1, conv2, skip;
    nn::Linear<S> temb_proj;
    int cout = 0;
    bool has_skip = false;

    Block() = default;
    Block(nn::ParamSet<S>& ps, Rng& rng, const std::string& prefix, int cin, int cout_,
          int temb_dim)
        : cout(cout_) {
      conv1 = nn::make_conv(ps, rng, prefix + ".conv1", cin, cout, 3);
      conv2 = nn::make_conv(ps, rng, prefix + ".conv2", cout, cout, 3);
      // FiLM-style conditioning: the step embedding provides a per-channel
      // scale and shift, so stepwise gains are directly representable.
      temb_proj = nn::make_linear(ps, rng, prefix + ".temb", temb_dim, 2 * cout, true, 0.3);
      if (cin != cout) {
        skip = nn::make_conv(ps, rng, prefix + ".skip", cin, cout, 1);
        has_skip = true;
      }
    }

    nn::Var forward(nn::Tape<S>& t, nn::Var x, nn::Var temb) const {
      nn::Var h = conv1(t, x);
      // film: [1, 2*cout] viewed as a (scale, shift) row pair.
      const nn::Var film = t.reshape(temb_proj(t, temb), {2, cout});
      const nn::Var scale = t.slice_rows(film, 0, 1);
      const nn::Var shift = t.slice_rows(film, 1, 1);
      nn::TensorT<S> ones({1, cout});
      ones.fill(S(1));
      h = t.mul_chan_broadcast(h, t.add(t.input(std::move(ones)), scale));
      h = t.add_chan_broadcast(h, shift);
      h = conv2(t, t.silu(h));
      const nn::Var res = has_skip ? skip(t, x) : x;
      return t.silu(t.add(h, res));
    }
  };

  int cond_ch_ = 0, base_ = 0;
  nn::Linear<S> temb1_, temb2_;
  nn::Conv2d<S> conv_in_;
  Block blk_d0_, blk_d1_, blk_mid_, blk_u1_, blk_u0_;
  nn::Conv2d<S> down0_, down1_, up1_, up0_;
  nn::Conv2d<S> conv_out_;
};

}  // namespace sitsr
