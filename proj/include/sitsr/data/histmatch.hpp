#pragma once

#include "sitsr/core/raster.hpp"

namespace sitsr {

/// Per-channel histogram matching: each source value is replaced by the
/// reference quantile at the source's empirical CDF rank. Ties use mid-ranks;
/// reference quantiles interpolate linearly between order statistics.
Raster histogram_match(const Raster& source, const Raster& reference);

}  // namespace sitsr
