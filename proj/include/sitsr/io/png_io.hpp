#pragma once

#include <string>

#include "sitsr/core/raster.hpp"

namespace sitsr {

/// Writes a unit-range raster as an 8-bit PNG (RGB for 3 channels, grayscale
/// otherwise; extra channels are dropped). Values are clipped first. Visual
/// artifact only: metrics always run on the raw arrays.
void write_png(const std::string& path, const Raster& r);

}  // namespace sitsr
