#pragma once

#include "sitsr/core/raster.hpp"

namespace sitsr {

/// Separable Catmull-Rom bicubic resize. Output dims are round(input * factor)
/// per axis; borders replicate edge pixels. factor == 1 is an exact identity.
Raster bicubic_resample(const Raster& r, double factor);

/// Convenience wrappers for integer scaling.
Raster bicubic_upsample(const Raster& r, int scale);
Raster bicubic_downsample(const Raster& r, int scale);

/// Separable Gaussian blur with kernel radius ceil(3 sigma), edge-replicated.
Raster gaussian_blur(const Raster& r, double sigma);

/// Index of the frame minimizing |t_k - t_ref|; ties break toward the
/// earlier date, then toward the lower index.
int closest_frame(const TimedSeries& series);

/// Keeps the n frames temporally closest to t_ref (same tie policy),
/// preserving their original order. No-op when the series is shorter.
TimedSeries truncate_series(const TimedSeries& series, int n);

}  // namespace sitsr
