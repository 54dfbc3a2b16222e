#pragma once

#include <functional>

#include "sitsr/diffusion/schedule.hpp"
#include "sitsr/nn/tensor.hpp"
#include "sitsr/rng.hpp"

namespace sitsr {

/// Closed-form forward noising: x_t = sqrt(ab_t) x0 + sqrt(1 - ab_t) noise.
template <class S>
nn::TensorT<S> ddpm_forward_sample(const nn::TensorT<S>& x0, int t,
                                   const nn::TensorT<S>& noise, const NoiseSchedule& sched) {
  sched.check_step(t);
  if (x0.shape != noise.shape) throw DomainError("forward_sample: noise shape mismatch");
  const S a = static_cast<S>(std::sqrt(sched.alpha_bar_at(t)));
  const S b = static_cast<S>(std::sqrt(1.0 - sched.alpha_bar_at(t)));
  nn::TensorT<S> out = x0;
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a * x0[i] + b * noise[i];
  return out;
}

/// One DDPM reverse step: posterior mean under the predicted noise, plus
/// sigma_t z for t > 1 (z = 0 at the final step).
template <class S>
nn::TensorT<S> ddpm_reverse_step(const nn::TensorT<S>& x_t, int t,
                                 const nn::TensorT<S>& predicted_noise,
                                 const NoiseSchedule& sched, Rng& rng) {
  sched.check_step(t);
  if (x_t.shape != predicted_noise.shape)
    throw DomainError("reverse_step: noise shape mismatch");
  const double coef = sched.beta_at(t) / std::sqrt(1.0 - sched.alpha_bar_at(t));
  const double inv_sqrt_alpha = 1.0 / std::sqrt(sched.alpha_at(t));
  const double sigma = t > 1 ? sched.sigma_at(t) : 0.0;
  nn::TensorT<S> out = x_t;
  for (int64_t i = 0; i < out.numel(); ++i) {
    double v = inv_sqrt_alpha * (static_cast<double>(x_t[i]) - coef * predicted_noise[i]);
    if (t > 1) v += sigma * rng.normal();
    out[i] = static_cast<S>(v);
  }
  return out;
}

/// Runs the full reverse chain from seeded standard normal. predict(x_t, t)
/// must return the predicted noise for the current state.
template <class S>
nn::TensorT<S> ddpm_sample_chain(
    const std::function<nn::TensorT<S>(const nn::TensorT<S>&, int)>& predict,
    const NoiseSchedule& sched, const std::vector<int>& shape, uint64_t seed) {
  Rng rng(seed);
  nn::TensorT<S> x(shape);
  for (int64_t i = 0; i < x.numel(); ++i) x[i] = static_cast<S>(rng.normal());
  for (int t = sched.steps; t >= 1; --t) x = ddpm_reverse_step(x, t, predict(x, t), sched, rng);
  return x;
}

}  // namespace sitsr
