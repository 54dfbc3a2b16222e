#pragma once

#include <functional>
#include <vector>

#include "sitsr/core/raster.hpp"

namespace sitsr {

/// Shift search window. SR is center-cropped by margin = delta/2 on every
/// border; HR windows slide over {0..delta}^2 so the aligned offset sits at
/// (margin, margin).
struct ShiftMAEConfig {
  int delta = 6;

  int margin() const { return delta / 2; }
  void validate() const;
};

double mae(const Raster& a, const Raster& b);
double rmse(const Raster& a, const Raster& b);

/// Minimum MAE over all (u, v) shifts of the HR window against the
/// center-cropped SR image.
double shift_mae(const Raster& sr, const Raster& hr, const ShiftMAEConfig& cfg = {});

/// 10 log10(255^2 / MSE) on byte-scale values; +infinity when MSE == 0.
double psnr(const Raster& a, const Raster& b);

/// Standard SSIM: 11x11 Gaussian window, sigma 1.5, K1 = 0.01, K2 = 0.03,
/// dynamic range 255, valid-region filtering, averaged over channels.
double ssim(const Raster& a, const Raster& b);

/// Any feature pyramid usable for perceptual distances.
using FeatureExtractor = std::function<std::vector<Raster>(const Raster&)>;

/// Deterministic multi-scale random-convolution pyramid. A stand-in with the
/// right structure for perceptual comparisons; not comparable to published
/// LPIPS numbers.
FeatureExtractor builtin_feature_extractor();

/// Mean over scales of the mean squared distance between channel-unit-
/// normalized feature maps.
double perceptual_distance(const Raster& a, const Raster& b, const FeatureExtractor& extractor);

}  // namespace sitsr
