#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sitsr/core/raster.hpp"

namespace sitsr {

/// On-disk layout of one sample (one directory per sample):
///   lr_000.npy .. lr_TTT.npy   per-frame LR rasters, C x H x W float32
///   hr.npy                     HR target raster
///   dynamics.npy               (optional) true per-day drift field, HR grid
///   cloud_000.npy ..           (optional) per-frame cloud masks, LR grid
///   meta.json                  timestamps, t_ref, block_id, scale, value_range
struct StoredSample {
  SRSample sample;
  std::optional<Raster> dynamics;       // per-day drift of the scene, HR grid
  std::vector<Raster> cloud_masks;      // one per frame when present
};

void save_sample(const std::string& dir, const StoredSample& s);
StoredSample load_sample(const std::string& dir);

}  // namespace sitsr
