#pragma once

#include <functional>
#include <optional>
#include <string>

#include "sitsr/data/dataset.hpp"
#include "sitsr/train/checkpoint.hpp"

namespace sitsr {

struct TrainConfig {
  ModelSpec model;
  int64_t steps = 2000;
  int batch_size = 8;
  double lr = 6e-4;
  double decay = 0.7;
  int64_t decay_interval = 50000;
  uint64_t seed = 0;
  int series_length = 8;
  int64_t val_interval = 1000;
  int val_subset = 512;
  double grad_clip = -1.0;  // <0: auto (1.0 for diffusion kinds, off otherwise)
  std::string loss = "l1";  // diffusion kinds apply it to the predicted noise
  PipelineConfig pipeline;
  int threads = 0;

  double effective_grad_clip() const;
  void validate() const;
  nlohmann::json to_json() const;
};

struct StepLog {
  int64_t step = 0;
  double loss = 0.0;
  double lr = 0.0;
  std::optional<double> val_mae;  // byte-scale MAE on the validation subset
};

using TrainSink = std::function<void(const StepLog&)>;

struct TrainResult {
  Checkpoint checkpoint;
  bool diverged = false;
  int64_t steps_run = 0;
};

/// Deterministic-given-seed optimization loop: batches are drawn i.i.d. from
/// the train split, series are truncated to the configured length (frames
/// closest to t_ref kept), gradients are averaged over the batch, Adam with
/// a step-decay schedule updates the weights. On a non-finite loss the loop
/// stops and returns the last finite state with diverged = true.
TrainResult train(const TrainConfig& cfg, const Dataset& dataset, const NormStats& stats,
                  const TrainSink& sink = nullptr,
                  const Checkpoint* resume_from = nullptr);

/// Byte-scale MAE of the model over up to `subset` validation samples.
double validation_mae(const SRModel& model, const Dataset& dataset, const NormStats& stats,
                      const PipelineConfig& pipeline, int series_length, int subset,
                      int threads = 0);

}  // namespace sitsr
