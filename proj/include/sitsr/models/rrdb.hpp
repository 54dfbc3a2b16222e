#pragma once

#include <string>
#include <vector>

#include "sitsr/nn/modules.hpp"

namespace sitsr {

/// One residual dense block: five 3x3 convs with dense connections,
/// residual-scaled by 0.2 (ESRGAN recipe).
template <class S>
class ResidualDenseBlock {
 public:
  ResidualDenseBlock() = default;

  ResidualDenseBlock(nn::ParamSet<S>& ps, Rng& rng, const std::string& prefix, int nf, int gc) {
    for (int i = 0; i < 4; ++i)
      convs_.push_back(nn::make_conv(ps, rng, prefix + ".c" + std::to_string(i + 1),
                                     nf + i * gc, gc, 3, 1, -1, 1, true, 0.1));
    convs_.push_back(nn::make_conv(ps, rng, prefix + ".c5", nf + 4 * gc, nf, 3, 1, -1, 1,
                                   true, 0.1));
  }

  nn::Var forward(nn::Tape<S>& t, nn::Var x) const {
    std::vector<nn::Var> feats{x};
    for (size_t i = 0; i < 4; ++i) {
      const nn::Var in = feats.size() == 1 ? feats[0] : t.concat(feats);
      feats.push_back(t.leaky_relu(convs_[i](t, in), S(0.2)));
    }
    const nn::Var x5 = convs_[4](t, t.concat(feats));
    return t.add(x, x5, S(0.2));
  }

 private:
  std::vector<nn::Conv2d<S>> convs_;
};

/// Residual-in-residual dense block: three dense blocks, outer residual
/// scaled by 0.2.
template <class S>
class RRDBBlock {
 public:
  RRDBBlock() = default;

  RRDBBlock(nn::ParamSet<S>& ps, Rng& rng, const std::string& prefix, int nf, int gc) {
    for (int i = 0; i < 3; ++i)
      blocks_.emplace_back(ps, rng, prefix + ".rdb" + std::to_string(i + 1), nf, gc);
  }

  nn::Var forward(nn::Tape<S>& t, nn::Var x) const {
    nn::Var cur = x;
    for (const auto& b : blocks_) cur = b.forward(t, cur);
    return t.add(x, cur, S(0.2));
  }

 private:
  std::vector<ResidualDenseBlock<S>> blocks_;
};

/// RRDB feature trunk: first conv, n blocks, trunk conv, global residual.
/// Input [N,3,H,W] -> features [N,nf,H,W].
template <class S>
class RRDBTrunk {
 public:
  RRDBTrunk() = default;

  RRDBTrunk(nn::ParamSet<S>& ps, Rng& rng, const std::string& prefix, int in_ch, int nf,
            int gc, int n_blocks) {
    if (n_blocks < 1) throw ConfigError("rrdb: n_blocks must be >= 1");
    conv_first_ = nn::make_conv(ps, rng, prefix + ".conv_first", in_ch, nf, 3);
    for (int i = 0; i < n_blocks; ++i)
      blocks_.emplace_back(ps, rng, prefix + ".b" + std::to_string(i), nf, gc);
    conv_trunk_ = nn::make_conv(ps, rng, prefix + ".conv_trunk", nf, nf, 3);
  }

  nn::Var forward(nn::Tape<S>& t, nn::Var x) const {
    const nn::Var fea = conv_first_(t, x);
    nn::Var cur = fea;
    for (const auto& b : blocks_) cur = b.forward(t, cur);
    return t.add(fea, conv_trunk_(t, cur));
  }

 private:
  nn::Conv2d<S> conv_first_;
  std::vector<RRDBBlock<S>> blocks_;
  nn::Conv2d<S> conv_trunk_;
};

}  // namespace sitsr
