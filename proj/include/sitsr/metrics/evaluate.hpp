#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "sitsr/data/dataset.hpp"
#include "sitsr/metrics/metrics.hpp"
#include "sitsr/models/model.hpp"

namespace sitsr {

struct SampleMetrics {
  size_t index = 0;
  int64_t block_id = 0;
  int64_t gap_days = 0;  // |closest LR date - t_ref|
  double mae = 0, shift_mae = 0, rmse = 0, psnr = 0, ssim = 0, perceptual = 0;
};

struct MetricAggregates {
  size_t count = 0;
  double mae = 0, shift_mae = 0, rmse = 0, psnr = 0, ssim = 0, perceptual = 0;
};

/// Time-gap strata: < 10 days, 10-30 days, > 30 days.
struct Stratum {
  std::string label;
  MetricAggregates agg;
};

struct ReportEntry {
  int series_length = 0;  // 0 = full series
  std::vector<SampleMetrics> per_sample;
  MetricAggregates aggregates;
  std::array<Stratum, 3> strata;
};

struct MetricsReport {
  std::string model_kind;
  int scale = 4;
  std::vector<ReportEntry> entries;
};

struct EvalConfig {
  Split split = Split::test;
  std::vector<int> series_lengths;  // empty -> one entry with the full series
  ShiftMAEConfig shift;
  PipelineConfig pipeline;
  uint64_t seed = 0;       // sampling seed base for diffusion kinds
  int threads = 0;
  size_t max_samples = 0;  // 0 = all
};

int stratum_of(int64_t gap_days);
MetricAggregates aggregate(const std::vector<SampleMetrics>& samples);

/// Runs the model over the split, denormalizes to the byte scale, computes
/// all metrics and the gap-stratified aggregates, one report entry per
/// requested series length.
MetricsReport evaluate(const SRModel& model, const Dataset& dataset, const NormStats& stats,
                       const EvalConfig& cfg);

void save_report_json(const std::string& path, const MetricsReport& report);
MetricsReport load_report_json(const std::string& path);
void save_report_csv(const std::string& path, const MetricsReport& report);

}  // namespace sitsr
