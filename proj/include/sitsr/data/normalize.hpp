#pragma once

#include <string>
#include <vector>

#include "sitsr/core/raster.hpp"

namespace sitsr {

struct ChannelStats {
  double lo = 0.0;
  double hi = 1.0;
};

/// Percentile-based min/max estimates per channel, one set per sensor source.
/// Computed on the training split only.
struct NormStats {
  std::vector<ChannelStats> lr;
  std::vector<ChannelStats> hr;

  bool empty() const { return lr.empty() && hr.empty(); }
};

void save_norm_stats(const std::string& path, const NormStats& stats);
NormStats load_norm_stats(const std::string& path);

/// (x - lo) / (hi - lo), clipped to [0, 1]. Throws ConfigError on a
/// degenerate channel (lo == hi).
Raster percentile_normalize(const Raster& r, const std::vector<ChannelStats>& stats);

/// Percentile estimator over a value sample: linear interpolation between
/// order statistics at pct in [0, 100].
double percentile_of(std::vector<float>& values, double pct);

}  // namespace sitsr
