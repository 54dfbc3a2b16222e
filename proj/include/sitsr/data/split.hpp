#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "sitsr/core/manifest.hpp"

namespace sitsr {

/// Split proportions over geographic blocks. Defaults reproduce a 70/30
/// train/test partition with 10% of the training share held out as
/// validation (0.63 / 0.07 / 0.30).
struct SplitRatios {
  double train = 0.63;
  double val = 0.07;
  double test = 0.30;

  void validate() const;
};

/// Assigns every block to exactly one split. Deterministic in
/// (block set, ratios, seed); all patches of a block inherit its split.
std::map<int64_t, Split> block_split(const std::vector<int64_t>& block_ids,
                                     const SplitRatios& ratios, uint64_t seed);

/// Applies a block assignment to manifest records in place.
void apply_split(DatasetManifest& manifest, const std::map<int64_t, Split>& assignment);

}  // namespace sitsr
