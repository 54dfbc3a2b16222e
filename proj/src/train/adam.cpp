#include "sitsr/train/adam.hpp"

#include <cmath>

#include "sitsr/errors.hpp"

namespace sitsr {

Adam::Adam(const nn::ParamSet<float>& params, AdamConfig cfg) : cfg_(cfg) {
  m_.reserve(params.count());
  v_.reserve(params.count());
  for (size_t i = 0; i < params.count(); ++i) {
    m_.emplace_back(params.at(i).value.shape);
    v_.emplace_back(params.at(i).value.shape);
  }
}

void Adam::step(nn::ParamSet<float>& params, double lr) {
  if (m_.size() != params.count()) throw StateError("adam: optimizer/param count mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t p = 0; p < params.count(); ++p) {
    auto& param = params.at(p);
    auto& m = m_[p];
    auto& v = v_[p];
    for (int64_t i = 0; i < param.value.numel(); ++i) {
      const double g = param.grad[i];
      if (!std::isfinite(g))
        throw TrainError("adam: non-finite gradient in parameter '" + param.name + "'");
      m[i] = static_cast<float>(cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g);
      v[i] = static_cast<float>(cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g);
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      param.value[i] =
          static_cast<float>(param.value[i] - lr * mhat / (std::sqrt(vhat) + cfg_.eps));
    }
  }
}

void Adam::restore(std::vector<nn::Tensor> m, std::vector<nn::Tensor> v, int64_t t) {
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
}

double lr_schedule(int64_t step, double base, double decay, int64_t interval) {
  if (step < 0) throw DomainError("lr_schedule: negative step");
  if (interval <= 0) return base;
  return base * std::pow(decay, static_cast<double>(step / interval));
}

double clip_grad_norm(nn::ParamSet<float>& params, double max_norm) {
  double sq = 0.0;
  for (size_t p = 0; p < params.count(); ++p) {
    const auto& g = params.at(p).grad;
    for (int64_t i = 0; i < g.numel(); ++i) sq += static_cast<double>(g[i]) * g[i];
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm && norm > 0.0) {
    const float s = static_cast<float>(max_norm / norm);
    for (size_t p = 0; p < params.count(); ++p) {
      auto& g = params.at(p).grad;
      for (int64_t i = 0; i < g.numel(); ++i) g[i] *= s;
    }
  }
  return norm;
}

}  // namespace sitsr
