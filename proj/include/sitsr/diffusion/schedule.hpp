#pragma once

#include <cmath>
#include <vector>

#include "sitsr/errors.hpp"

namespace sitsr {

/// Variance schedule of the denoising diffusion process. Index convention is
/// 1-based: step t ranges over [1, steps]; accessors take that t directly.
struct NoiseSchedule {
  int steps = 0;
  std::vector<double> beta;       // beta_1 .. beta_steps
  std::vector<double> alpha;      // 1 - beta_t
  std::vector<double> alpha_bar;  // prod_{u<=t} alpha_u

  static NoiseSchedule linear(int steps = 500, double beta_start = 1e-4,
                              double beta_end = 0.02) {
    if (steps < 1) throw ConfigError("schedule: steps must be >= 1");
    if (!(beta_start > 0.0) || !(beta_end < 1.0) || beta_start > beta_end)
      throw ConfigError("schedule: need 0 < beta_start <= beta_end < 1");
    NoiseSchedule s;
    s.steps = steps;
    s.beta.resize(static_cast<size_t>(steps));
    s.alpha.resize(static_cast<size_t>(steps));
    s.alpha_bar.resize(static_cast<size_t>(steps));
    double prod = 1.0;
    for (int t = 0; t < steps; ++t) {
      const double b = steps == 1 ? beta_start
                                  : beta_start + (beta_end - beta_start) * t / (steps - 1.0);
      s.beta[static_cast<size_t>(t)] = b;
      s.alpha[static_cast<size_t>(t)] = 1.0 - b;
      prod *= 1.0 - b;
      s.alpha_bar[static_cast<size_t>(t)] = prod;
    }
    return s;
  }

  void check_step(int t) const {
    if (t < 1 || t > steps) throw DomainError("schedule: step out of [1, steps]");
  }

  double beta_at(int t) const { return beta[static_cast<size_t>(t - 1)]; }
  double alpha_at(int t) const { return alpha[static_cast<size_t>(t - 1)]; }
  double alpha_bar_at(int t) const { return alpha_bar[static_cast<size_t>(t - 1)]; }
  double alpha_bar_prev(int t) const {
    return t <= 1 ? 1.0 : alpha_bar[static_cast<size_t>(t - 2)];
  }

  /// Posterior standard deviation sigma_t (zero at t = 1).
  double sigma_at(int t) const {
    const double bt = beta_at(t);
    const double tilde = (1.0 - alpha_bar_prev(t)) / (1.0 - alpha_bar_at(t)) * bt;
    return std::sqrt(tilde);
  }
};

}  // namespace sitsr
