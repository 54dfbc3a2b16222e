#include "sitsr/fusion/median.hpp"

#include <algorithm>
#include <vector>

#include "sitsr/errors.hpp"

namespace sitsr {

Raster median_reference(const TimedSeries& series) {
  if (series.frames.empty()) throw DomainError("median_reference: empty series");
  const Raster& first = series.frames.front().raster;
  const size_t t = series.frames.size();
  if (t == 1) return first;

  Raster out(first.c, first.h, first.w, first.range);
  out.channels = first.channels;
  std::vector<float> buf(t);
  const size_t n = first.size();
  for (size_t i = 0; i < n; ++i) {
    for (size_t k = 0; k < t; ++k) buf[k] = series.frames[k].raster.v[i];
    const size_t mid = t / 2;
    std::nth_element(buf.begin(), buf.begin() + mid, buf.end());
    if (t % 2 == 1) {
      out.v[i] = buf[mid];
    } else {
      const float hi = buf[mid];
      const float lo = *std::max_element(buf.begin(), buf.begin() + mid);
      out.v[i] = 0.5f * (lo + hi);
    }
  }
  return out;
}

}  // namespace sitsr
