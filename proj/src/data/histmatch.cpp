#include "sitsr/data/histmatch.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "sitsr/errors.hpp"

namespace sitsr {

namespace {

// Quantile of a sorted sample at q in [0,1], with order statistic j sitting
// at position (j + 0.5) / m and linear interpolation in between.
float sorted_quantile(const std::vector<float>& sorted, double q) {
  const size_t m = sorted.size();
  const double pos = q * static_cast<double>(m) - 0.5;
  if (pos <= 0.0) return sorted.front();
  if (pos >= static_cast<double>(m - 1)) return sorted.back();
  const size_t j = static_cast<size_t>(pos);
  const double frac = pos - static_cast<double>(j);
  return static_cast<float>((1.0 - frac) * sorted[j] + frac * sorted[j + 1]);
}

}  // namespace

Raster histogram_match(const Raster& source, const Raster& reference) {
  if (source.c != reference.c)
    throw DomainError("histogram_match: channel count mismatch");
  if (source.v.empty() || reference.v.empty())
    throw DomainError("histogram_match: empty raster");

  Raster out(source.c, source.h, source.w, source.range);
  out.channels = source.channels;
  const size_t n = static_cast<size_t>(source.h) * source.w;
  const size_t m = static_cast<size_t>(reference.h) * reference.w;

  std::vector<size_t> order(n);
  std::vector<float> ref_sorted(m);
  for (int c = 0; c < source.c; ++c) {
    const float* src = source.v.data() + static_cast<size_t>(c) * n;
    const float* ref = reference.v.data() + static_cast<size_t>(c) * m;
    float* dst = out.v.data() + static_cast<size_t>(c) * n;

    std::copy(ref, ref + m, ref_sorted.begin());
    std::sort(ref_sorted.begin(), ref_sorted.end());

    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [src](size_t a, size_t b) { return src[a] < src[b]; });

    // Mid-rank over runs of equal values, then look up the reference quantile.
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      while (j + 1 < n && src[order[j + 1]] == src[order[i]]) ++j;
      const double midrank = 0.5 * (static_cast<double>(i) + static_cast<double>(j));
      const double q = (midrank + 0.5) / static_cast<double>(n);
      const float v = sorted_quantile(ref_sorted, q);
      for (size_t k = i; k <= j; ++k) dst[order[k]] = v;
      i = j + 1;
    }
  }
  return out;
}

}  // namespace sitsr
