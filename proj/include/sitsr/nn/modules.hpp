#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "sitsr/nn/tape.hpp"
#include "sitsr/rng.hpp"

namespace sitsr::nn {

/// Owns every learned tensor of a model, keyed by name in creation order.
/// Creation order is deterministic, so seeded initialization reproduces
/// identical weights run to run.
template <class S>
class ParamSet {
 public:
  Param<S>& create(const std::string& name, std::vector<int> shape) {
    if (index_.count(name)) throw ConfigError("duplicate parameter '" + name + "'");
    auto p = std::make_unique<Param<S>>();
    p->name = name;
    p->value = TensorT<S>(shape);
    p->grad = TensorT<S>(std::move(shape));
    index_[name] = params_.size();
    params_.push_back(std::move(p));
    return *params_.back();
  }

  Param<S>* find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : params_[it->second].get();
  }

  size_t count() const { return params_.size(); }
  Param<S>& at(size_t i) { return *params_[i]; }
  const Param<S>& at(size_t i) const { return *params_[i]; }

  int64_t total_size() const {
    int64_t n = 0;
    for (const auto& p : params_) n += p->value.numel();
    return n;
  }

  void zero_grads() {
    for (auto& p : params_) p->grad.fill(S(0));
  }

 private:
  std::vector<std::unique_ptr<Param<S>>> params_;
  std::unordered_map<std::string, size_t> index_;
};

template <class S>
void init_normal(TensorT<S>& t, Rng& rng, double std) {
  for (auto& x : t.v) x = static_cast<S>(rng.normal() * std);
}

/// Kaiming-style init for a conv weight [Cout, Cin/g, kh, kw].
template <class S>
void init_he(TensorT<S>& t, Rng& rng, double gain = 1.0) {
  const int64_t fan_in = t.numel() / t.dim(0);
  init_normal(t, rng, gain * std::sqrt(2.0 / static_cast<double>(fan_in)));
}

template <class S>
struct Conv2d {
  Param<S>* w = nullptr;
  Param<S>* b = nullptr;
  int stride = 1, pad = 0, groups = 1;

  Var operator()(Tape<S>& t, Var x) const {
    const Var wv = t.param(*w);
    const Var bv = b ? t.param(*b) : Var{-1};
    return t.conv2d(x, wv, bv, stride, pad, groups);
  }
};

template <class S>
Conv2d<S> make_conv(ParamSet<S>& ps, Rng& rng, const std::string& name, int cin, int cout,
                    int k, int stride = 1, int pad = -1, int groups = 1, bool bias = true,
                    double gain = 1.0) {
  Conv2d<S> c;
  c.w = &ps.create(name + ".w", {cout, cin / groups, k, k});
  init_he(c.w->value, rng, gain);
  if (bias) c.b = &ps.create(name + ".b", {cout});
  c.stride = stride;
  c.pad = pad < 0 ? k / 2 : pad;
  c.groups = groups;
  return c;
}

template <class S>
struct ConvTranspose2d {
  Param<S>* w = nullptr;
  Param<S>* b = nullptr;
  int stride = 2, pad = 1;

  Var operator()(Tape<S>& t, Var x) const {
    const Var wv = t.param(*w);
    const Var bv = b ? t.param(*b) : Var{-1};
    return t.conv_transpose2d(x, wv, bv, stride, pad);
  }
};

template <class S>
ConvTranspose2d<S> make_conv_transpose(ParamSet<S>& ps, Rng& rng, const std::string& name,
                                       int cin, int cout, int k = 4, int stride = 2,
                                       int pad = 1) {
  ConvTranspose2d<S> c;
  c.w = &ps.create(name + ".w", {cin, cout, k, k});
  const int64_t fan_in = static_cast<int64_t>(cin) * k * k / (stride * stride);
  init_normal(c.w->value, rng, std::sqrt(2.0 / static_cast<double>(fan_in)));
  c.b = &ps.create(name + ".b", {cout});
  c.stride = stride;
  c.pad = pad;
  return c;
}

template <class S>
struct Linear {
  Param<S>* w = nullptr;
  Param<S>* b = nullptr;

  Var operator()(Tape<S>& t, Var x) const {
    const Var wv = t.param(*w);
    const Var bv = b ? t.param(*b) : Var{-1};
    return t.linear(x, wv, bv);
  }
};

template <class S>
Linear<S> make_linear(ParamSet<S>& ps, Rng& rng, const std::string& name, int din, int dout,
                      bool bias = true, double gain = 1.0) {
  Linear<S> l;
  l.w = &ps.create(name + ".w", {dout, din});
  init_he(l.w->value, rng, gain);
  if (bias) l.b = &ps.create(name + ".b", {dout});
  return l;
}

}  // namespace sitsr::nn
