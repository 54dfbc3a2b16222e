#pragma once

#include <cstdint>
#include <vector>

#include "sitsr/nn/modules.hpp"

namespace sitsr {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam over a ParamSet. Moment tensors follow the parameter
/// creation order, which is what the checkpoint serializes.
class Adam {
 public:
  Adam() = default;
  explicit Adam(const nn::ParamSet<float>& params, AdamConfig cfg = {});

  /// One update from the gradients currently stored in the ParamSet.
  /// Throws TrainError naming the parameter on a non-finite gradient.
  void step(nn::ParamSet<float>& params, double lr);

  int64_t steps_taken() const { return t_; }
  const std::vector<nn::Tensor>& m() const { return m_; }
  const std::vector<nn::Tensor>& v() const { return v_; }
  void restore(std::vector<nn::Tensor> m, std::vector<nn::Tensor> v, int64_t t);
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<nn::Tensor> m_, v_;
  int64_t t_ = 0;
};

/// Step-decay schedule: base * decay^floor(step / interval).
double lr_schedule(int64_t step, double base, double decay, int64_t interval);

/// Scales all gradients so their global L2 norm is at most max_norm.
/// Returns the pre-clip norm. max_norm <= 0 disables clipping.
double clip_grad_norm(nn::ParamSet<float>& params, double max_norm);

}  // namespace sitsr
