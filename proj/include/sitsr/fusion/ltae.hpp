#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sitsr/encoding.hpp"
#include "sitsr/errors.hpp"
#include "sitsr/nn/modules.hpp"

namespace sitsr {

/// Per-frame, per-head, per-pixel attention weights. weights[h][t][y][x]
/// sums to one over t for every (h, y, x).
struct AttentionMaps {
  int heads = 0, frames = 0, h = 0, w = 0;
  std::vector<float> v;

  float at(int head, int t, int y, int x) const {
    return v[((static_cast<size_t>(head) * frames + t) * h + y) * w + x];
  }
  float mean_weight_of_frame(int t) const {
    double acc = 0.0;
    size_t n = 0;
    for (int hd = 0; hd < heads; ++hd)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x, ++n) acc += at(hd, t, y, x);
    return static_cast<float>(acc / static_cast<double>(n));
  }
};

struct LTAEConfig {
  EncodingConfig encoding;
  int d_k = 8;
  int mlp_hidden = 0;  // 0 -> same width as the feature channels

  void validate(int c_f) const {
    encoding.validate();
    if (d_k < 1) throw ConfigError("ltae: d_k must be >= 1");
    if (c_f % encoding.heads != 0)
      throw ConfigError("ltae: feature channels must be divisible by heads");
  }
};

/// Lightweight temporal attention applied independently at every pixel.
/// Channels are split into one group per head; the date encoding (projected
/// to the group width) is added to the keys only, a learned master query
/// scores each frame, and the head outputs are convex combinations of the
/// un-encoded frame features. A shared two-layer pixel-wise MLP mixes the
/// concatenated heads.
template <class S>
class LTAE2d {
 public:
  LTAE2d() = default;

  LTAE2d(nn::ParamSet<S>& ps, Rng& rng, const std::string& prefix, int c_f, LTAEConfig cfg)
      : cfg_(cfg), c_f_(c_f) {
    cfg.validate(c_f);
    heads_ = cfg.encoding.heads;
    group_ = c_f / heads_;
    const int hidden = cfg.mlp_hidden > 0 ? cfg.mlp_hidden : c_f;
    // No bias: a bias here would shift every frame's keys equally, which the
    // softmax cancels exactly.
    enc_proj_ = nn::make_linear(ps, rng, prefix + ".enc_proj", cfg.encoding.per_head_dim(),
                                group_, false);
    key_proj_ = nn::make_conv(ps, rng, prefix + ".key", c_f, heads_ * cfg.d_k, 1, 1, 0,
                              heads_, false);
    query_ = &ps.create(prefix + ".query", {heads_, cfg.d_k, 1, 1});
    nn::init_normal(query_->value, rng, 1.0 / std::sqrt(static_cast<double>(cfg.d_k)));
    mlp1_ = nn::make_conv(ps, rng, prefix + ".mlp1", c_f, hidden, 1);
    mlp2_ = nn::make_conv(ps, rng, prefix + ".mlp2", hidden, c_f, 1);
  }

  /// features: [T, C_f, H, W]; encoding rows must match T.
  /// attention_out, when non-null, receives the softmax node so callers can
  /// read the weights off the tape after the forward pass.
  nn::Var forward(nn::Tape<S>& t, nn::Var features, const PositionalEncoding& pe,
                  nn::Var* attention_out = nullptr) const {
    const auto& fv = t.val(features);
    if (fv.rank() != 4) throw DomainError("ltae: features must be [T,C,H,W]");
    const int frames = fv.dim(0);
    if (frames < 1) throw DomainError("ltae: empty series");
    if (fv.dim(1) != c_f_) throw ConfigError("ltae: feature channel mismatch");
    if (pe.rows != frames) throw DomainError("ltae: encoding rows != series length");

    // Keys carry the date information; values stay un-encoded so the fused
    // map remains a convex combination of the input features.
    const nn::Var enc = t.input(pe.template as_tensor<S>());
    const nn::Var enc_g = enc_proj_(t, enc);              // [T, group]
    const nn::Var enc_c = t.tile_rows(enc_g, heads_);     // [T, C_f]
    const nn::Var keyed = t.add_row_broadcast(features, enc_c);
    const nn::Var keys = key_proj_(t, keyed);             // [T, heads*d_k, H, W]
    nn::Var scores = t.conv2d(keys, t.param(*query_), nn::Var{-1}, 1, 0, heads_);
    scores = t.scale(scores, static_cast<S>(1.0 / std::sqrt(static_cast<double>(cfg_.d_k))));
    const nn::Var attn = t.softmax_frames(scores);        // [T, heads, H, W]
    if (attention_out) *attention_out = attn;
    const nn::Var mixed = t.attn_mix(attn, features);     // [1, C_f, H, W]
    const nn::Var hidden = t.relu(mlp1_(t, mixed));
    return mlp2_(t, hidden);
  }

  /// Copies the attention node [T,heads,H,W] into the public head-major type.
  AttentionMaps read_maps(nn::Tape<S>& t, nn::Var attention_node) const {
    const auto& a = t.val(attention_node);
    AttentionMaps m;
    m.frames = a.dim(0);
    m.heads = a.dim(1);
    m.h = a.dim(2);
    m.w = a.dim(3);
    m.v.resize(static_cast<size_t>(a.numel()));
    const int64_t hw = static_cast<int64_t>(m.h) * m.w;
    for (int ti = 0; ti < m.frames; ++ti)
      for (int hd = 0; hd < m.heads; ++hd) {
        const S* src = a.data() + (static_cast<int64_t>(ti) * m.heads + hd) * hw;
        float* dst = m.v.data() + (static_cast<int64_t>(hd) * m.frames + ti) * hw;
        for (int64_t i = 0; i < hw; ++i) dst[i] = static_cast<float>(src[i]);
      }
    return m;
  }

  const LTAEConfig& config() const { return cfg_; }
  int feature_channels() const { return c_f_; }

 private:
  LTAEConfig cfg_;
  int c_f_ = 0, heads_ = 0, group_ = 0;
  nn::Linear<S> enc_proj_;
  nn::Conv2d<S> key_proj_;
  nn::Param<S>* query_ = nullptr;
  nn::Conv2d<S> mlp1_, mlp2_;
};

}  // namespace sitsr
