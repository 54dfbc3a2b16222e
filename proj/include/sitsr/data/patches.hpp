#pragma once

#include <vector>

#include "sitsr/core/raster.hpp"

namespace sitsr {

/// Cuts aligned, non-overlapping (LR, HR) patch pairs from a co-registered
/// scene pair. Incomplete border patches are discarded. The HR window offset
/// is always scale x the LR window offset.
std::vector<SRSample> make_patches(const TimedSeries& lr_scene, const Raster& hr_scene,
                                   int lr_size = 74, int hr_size = 296, int64_t block_id = 0);

/// Crop helper shared with the synthetic generator.
Raster crop(const Raster& r, int y0, int x0, int h, int w);

}  // namespace sitsr
