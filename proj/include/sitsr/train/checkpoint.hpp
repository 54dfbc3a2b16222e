#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sitsr/data/normalize.hpp"
#include "sitsr/models/model.hpp"
#include "sitsr/train/adam.hpp"

namespace sitsr {

/// Everything needed to resume training bit-exactly or to run inference:
/// model spec + weights, optimizer moments, RNG streams, normalization
/// stats, and the validation history. Stored as a single container file
/// with an embedded JSON metadata block followed by raw float32 blobs.
struct Checkpoint {
  ModelSpec spec;
  nlohmann::json train_config;      // echo of the resolved training config
  int64_t step = 0;
  std::vector<std::pair<int64_t, double>> val_history;
  NormStats norm_stats;

  std::vector<std::pair<std::string, nn::Tensor>> params;
  std::vector<nn::Tensor> adam_m, adam_v;
  int64_t adam_t = 0;

  std::string data_rng_state;   // hex-encoded
  std::string noise_rng_state;  // hex-encoded
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// Copies the model's current weights into a checkpoint shell.
Checkpoint snapshot_params(const SRModel& model);

/// Loads checkpoint weights into a freshly built model (names and shapes
/// must match the spec-derived parameter set).
void restore_params(SRModel& model, const Checkpoint& ckpt);

/// Convenience: build the model a checkpoint describes and load its weights.
SRModel model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace sitsr
