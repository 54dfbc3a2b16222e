#include "sitsr/data/resample.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sitsr/errors.hpp"

namespace sitsr {

namespace {

// Catmull-Rom kernel (bicubic with a = -0.5).
double cubic_kernel(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

struct TapPlan {
  std::vector<int> idx;     // 4 source indices per output position
  std::vector<double> wgt;  // 4 weights per output position
};

TapPlan plan_axis(int in_size, int out_size, double factor) {
  TapPlan p;
  p.idx.resize(static_cast<size_t>(out_size) * 4);
  p.wgt.resize(static_cast<size_t>(out_size) * 4);
  for (int o = 0; o < out_size; ++o) {
    const double src = (o + 0.5) / factor - 0.5;
    const int base = static_cast<int>(std::floor(src));
    double wsum = 0.0;
    for (int k = 0; k < 4; ++k) {
      const int i = base - 1 + k;
      const double w = cubic_kernel(src - i);
      p.idx[static_cast<size_t>(o) * 4 + k] = std::clamp(i, 0, in_size - 1);
      p.wgt[static_cast<size_t>(o) * 4 + k] = w;
      wsum += w;
    }
    // The kernel is a partition of unity on the real line; renormalize to
    // keep constants exact at clamped borders.
    for (int k = 0; k < 4; ++k) p.wgt[static_cast<size_t>(o) * 4 + k] /= wsum;
  }
  return p;
}

}  // namespace

Raster bicubic_resample(const Raster& r, double factor) {
  if (!(factor > 0.0)) throw DomainError("bicubic_resample: factor must be positive");
  const int oh = static_cast<int>(std::lround(r.h * factor));
  const int ow = static_cast<int>(std::lround(r.w * factor));
  if (oh < 1 || ow < 1) throw DomainError("bicubic_resample: output would be empty");

  const TapPlan px = plan_axis(r.w, ow, factor);
  const TapPlan py = plan_axis(r.h, oh, factor);

  Raster out(r.c, oh, ow, r.range);
  out.channels = r.channels;
  std::vector<double> row(static_cast<size_t>(r.h) * ow);
  for (int c = 0; c < r.c; ++c) {
    // Horizontal pass.
    for (int y = 0; y < r.h; ++y)
      for (int o = 0; o < ow; ++o) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k)
          acc += px.wgt[static_cast<size_t>(o) * 4 + k] *
                 r.at(c, y, px.idx[static_cast<size_t>(o) * 4 + k]);
        row[static_cast<size_t>(y) * ow + o] = acc;
      }
    // Vertical pass.
    for (int o = 0; o < oh; ++o)
      for (int x = 0; x < ow; ++x) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k)
          acc += py.wgt[static_cast<size_t>(o) * 4 + k] *
                 row[static_cast<size_t>(py.idx[static_cast<size_t>(o) * 4 + k]) * ow + x];
        out.at(c, o, x) = static_cast<float>(acc);
      }
  }
  return out;
}

Raster bicubic_upsample(const Raster& r, int scale) {
  return bicubic_resample(r, static_cast<double>(scale));
}

Raster bicubic_downsample(const Raster& r, int scale) {
  return bicubic_resample(r, 1.0 / static_cast<double>(scale));
}

Raster gaussian_blur(const Raster& r, double sigma) {
  if (!(sigma > 0.0)) return r;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[static_cast<size_t>(i + radius)] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += kernel[static_cast<size_t>(i + radius)];
  }
  for (auto& k : kernel) k /= sum;

  Raster tmp(r.c, r.h, r.w, r.range), out(r.c, r.h, r.w, r.range);
  out.channels = r.channels;
  for (int c = 0; c < r.c; ++c) {
    for (int y = 0; y < r.h; ++y)
      for (int x = 0; x < r.w; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[static_cast<size_t>(i + radius)] *
                 r.at(c, y, std::clamp(x + i, 0, r.w - 1));
        tmp.at(c, y, x) = static_cast<float>(acc);
      }
    for (int y = 0; y < r.h; ++y)
      for (int x = 0; x < r.w; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[static_cast<size_t>(i + radius)] *
                 tmp.at(c, std::clamp(y + i, 0, r.h - 1), x);
        out.at(c, y, x) = static_cast<float>(acc);
      }
  }
  return out;
}

int closest_frame(const TimedSeries& series) {
  if (series.frames.empty()) throw DomainError("closest_frame: empty series");
  int best = 0;
  for (int k = 1; k < series.length(); ++k) {
    const auto gap = [&](int i) {
      return std::abs(days_between(series.t_ref, series.frames[static_cast<size_t>(i)].time));
    };
    const auto date = [&](int i) {
      return series.frames[static_cast<size_t>(i)].time.epoch_day;
    };
    if (gap(k) < gap(best) || (gap(k) == gap(best) && date(k) < date(best))) best = k;
  }
  return best;
}

TimedSeries truncate_series(const TimedSeries& series, int n) {
  if (n < 1) throw DomainError("truncate_series: n must be >= 1");
  if (series.length() <= n) return series;
  std::vector<int> order(static_cast<size_t>(series.length()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const auto ga = std::abs(days_between(series.t_ref, series.frames[static_cast<size_t>(a)].time));
    const auto gb = std::abs(days_between(series.t_ref, series.frames[static_cast<size_t>(b)].time));
    if (ga != gb) return ga < gb;
    return series.frames[static_cast<size_t>(a)].time < series.frames[static_cast<size_t>(b)].time;
  });
  order.resize(static_cast<size_t>(n));
  std::sort(order.begin(), order.end());
  TimedSeries out;
  out.t_ref = series.t_ref;
  for (int i : order) out.frames.push_back(series.frames[static_cast<size_t>(i)]);
  return out;
}

}  // namespace sitsr
