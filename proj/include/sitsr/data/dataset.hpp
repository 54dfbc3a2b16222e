#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sitsr/core/manifest.hpp"
#include "sitsr/core/sample_io.hpp"
#include "sitsr/data/normalize.hpp"

namespace sitsr {

/// A dataset directory: manifest plus lazily loaded samples. preload() fills
/// an in-memory cache; afterwards load() is read-only and thread-safe.
class Dataset {
 public:
  static Dataset open(const std::string& dir);

  size_t size() const { return manifest_.records.size(); }
  const DatasetManifest& manifest() const { return manifest_; }
  const ManifestRecord& record(size_t i) const { return manifest_.records[i]; }
  const std::string& root() const { return root_; }

  StoredSample load(size_t i) const;
  void preload(Split split);
  void preload_all();

 private:
  std::string root_;
  DatasetManifest manifest_;
  std::vector<std::shared_ptr<const StoredSample>> cache_;
};

/// Preprocessing applied between storage and the model.
struct PipelineConfig {
  bool hist_match = true;
  int slack_days = 60;
};

/// Percentile estimation (2%/98% by default) over the training split,
/// independently for the LR and HR sources, subsampling at most max_pixels
/// values per channel and source.
NormStats compute_norm_stats(const Dataset& ds, double lo_pct = 2.0, double hi_pct = 98.0,
                             int64_t max_pixels = 10'000'000);

/// Normalizes every frame and the target to the unit range and (optionally)
/// histogram-matches the target toward the temporally closest LR frame.
SRSample prepare_sample(const SRSample& raw, const NormStats& stats,
                        const PipelineConfig& cfg);

}  // namespace sitsr
