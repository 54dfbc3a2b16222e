#pragma once

#include "sitsr/core/raster.hpp"

namespace sitsr {

/// Per-pixel, per-channel median over the frames of a series. For even T the
/// two middle order statistics are averaged.
Raster median_reference(const TimedSeries& series);

}  // namespace sitsr
