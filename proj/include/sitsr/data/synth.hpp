#pragma once

#include <cstdint>
#include <string>

#include "sitsr/core/sample_io.hpp"
#include "sitsr/data/split.hpp"
#include "sitsr/rng.hpp"

namespace sitsr {

/// Configuration of the synthetic paired-dataset generator. Scenes are
/// continuous functions S(x, t) = static field + (t - t_ref) * dynamics,
/// rendered at the HR grid for the target and degraded (blur, bicubic
/// downsample, radiometric jitter, noise, clouds) for each LR frame.
struct SynthConfig {
  int lr_size = 74;
  int scale = 4;
  int count = 100;

  // Series length distribution (inclusive bounds).
  int t_min = 8;
  int t_max = 26;

  // Revisit irregularity: base day gaps plus occasional long gaps.
  int gap_min = 2;
  int gap_max = 12;
  double long_gap_prob = 0.15;
  int long_gap_min = 20;
  int long_gap_max = 45;

  // Probability that the reference date is pushed into a constructed
  // acquisition hole, controlling the time-gap strata of the dataset.
  double mid_ref_prob = 0.25;  // closest gap ~ 10..30 days
  double far_ref_prob = 0.15;  // closest gap  > 30 days

  // LR degradation model.
  double blur_sigma = 2.0;      // HR-grid sigma before downsampling
  double noise_sigma = 0.02;
  double gain_jitter = 0.03;    // multiplicative, U[1-g, 1+g]
  double bias_jitter = 0.02;    // additive, U[-b, b]

  // Clouds: per-frame probability and blob size range (fraction of frame).
  double cloud_prob = 0.12;
  double cloud_min_frac = 0.05;
  double cloud_max_frac = 0.35;

  // Per-day drift magnitude of dynamic parcels (unit range per day).
  double dynamics_rate = 0.002;

  int samples_per_block = 20;
  SplitRatios ratios;
  uint64_t seed = 0;

  void validate() const;
};

/// Deterministic in (cfg.seed, index); safe to call in parallel.
StoredSample synth_sample(const SynthConfig& cfg, int index);

/// Paints one soft-edged, value-saturating elliptic cloud covering roughly
/// [min_frac, max_frac] of the raster; blends the mask into cloud_mask.
void paint_cloud(Raster& raster, Raster& cloud_mask, Rng& rng, double min_frac,
                 double max_frac);

/// Generates cfg.count samples under out_dir and writes manifest.json with
/// block-level splits. Returns the manifest.
DatasetManifest synth_generate(const SynthConfig& cfg, const std::string& out_dir,
                               int threads = 0);

}  // namespace sitsr
