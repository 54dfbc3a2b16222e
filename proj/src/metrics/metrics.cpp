#include "sitsr/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "sitsr/errors.hpp"
#include "sitsr/rng.hpp"

namespace sitsr {

void ShiftMAEConfig::validate() const {
  if (delta < 0) throw ConfigError("shift_mae: delta must be nonnegative");
  if (delta % 2 != 0) throw ConfigError("shift_mae: delta must be even");
}

namespace {

void check_same_shape(const Raster& a, const Raster& b, const char* who) {
  if (!a.same_shape(b)) throw DomainError(std::string(who) + ": shape mismatch");
}

double window_mae(const Raster& sr, int sy, int sx, const Raster& hr, int hy, int hx, int h,
                  int w) {
  double acc = 0.0;
  for (int c = 0; c < sr.c; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        acc += std::abs(static_cast<double>(sr.at(c, sy + y, sx + x)) -
                        static_cast<double>(hr.at(c, hy + y, hx + x)));
  return acc / (static_cast<double>(sr.c) * h * w);
}

}  // namespace

double mae(const Raster& a, const Raster& b) {
  check_same_shape(a, b, "mae");
  double acc = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i)
    acc += std::abs(static_cast<double>(a.v[i]) - static_cast<double>(b.v[i]));
  return acc / static_cast<double>(a.v.size());
}

double rmse(const Raster& a, const Raster& b) {
  check_same_shape(a, b, "rmse");
  double acc = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i) {
    const double d = static_cast<double>(a.v[i]) - static_cast<double>(b.v[i]);
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(a.v.size()));
}

double shift_mae(const Raster& sr, const Raster& hr, const ShiftMAEConfig& cfg) {
  check_same_shape(sr, hr, "shift_mae");
  cfg.validate();
  const int m = cfg.margin();
  if (sr.h <= 2 * m || sr.w <= 2 * m)
    throw DomainError("shift_mae: image smaller than the search window");
  const int ch = sr.h - 2 * m, cw = sr.w - 2 * m;
  double best = std::numeric_limits<double>::infinity();
  for (int u = 0; u <= cfg.delta; ++u)
    for (int v = 0; v <= cfg.delta; ++v)
      best = std::min(best, window_mae(sr, m, m, hr, u, v, ch, cw));
  return best;
}

double psnr(const Raster& a, const Raster& b) {
  check_same_shape(a, b, "psnr");
  double acc = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i) {
    const double d = static_cast<double>(a.v[i]) - static_cast<double>(b.v[i]);
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(a.v.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

std::vector<double> ssim_window() {
  std::vector<double> w(kSsimWindow);
  double sum = 0.0;
  const int r = kSsimWindow / 2;
  for (int i = -r; i <= r; ++i) {
    w[static_cast<size_t>(i + r)] = std::exp(-0.5 * i * i / (kSsimSigma * kSsimSigma));
    sum += w[static_cast<size_t>(i + r)];
  }
  for (auto& x : w) x /= sum;
  return w;
}

// Valid-region separable Gaussian filtering of one channel plane.
std::vector<double> filter_valid(const float* src, int h, int w, const std::vector<double>& k,
                                 int& oh, int& ow) {
  const int r = static_cast<int>(k.size()) / 2;
  oh = h - 2 * r;
  ow = w - 2 * r;
  std::vector<double> tmp(static_cast<size_t>(h) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (size_t i = 0; i < k.size(); ++i) acc += k[i] * src[static_cast<size_t>(y) * w + x + i];
      tmp[static_cast<size_t>(y) * ow + x] = acc;
    }
  std::vector<double> out(static_cast<size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (size_t i = 0; i < k.size(); ++i) acc += k[i] * tmp[(static_cast<size_t>(y) + i) * ow + x];
      out[static_cast<size_t>(y) * ow + x] = acc;
    }
  return out;
}

}  // namespace

double ssim(const Raster& a, const Raster& b) {
  check_same_shape(a, b, "ssim");
  if (a.h < kSsimWindow || a.w < kSsimWindow)
    throw DomainError("ssim: image smaller than the filter window");
  const auto win = ssim_window();
  constexpr double kL = 255.0;
  constexpr double c1 = (0.01 * kL) * (0.01 * kL);
  constexpr double c2 = (0.03 * kL) * (0.03 * kL);

  const size_t plane = static_cast<size_t>(a.h) * a.w;
  std::vector<float> a2(plane), b2(plane), ab(plane);
  double total = 0.0;
  for (int c = 0; c < a.c; ++c) {
    const float* pa = a.v.data() + static_cast<size_t>(c) * plane;
    const float* pb = b.v.data() + static_cast<size_t>(c) * plane;
    for (size_t i = 0; i < plane; ++i) {
      a2[i] = pa[i] * pa[i];
      b2[i] = pb[i] * pb[i];
      ab[i] = pa[i] * pb[i];
    }
    int oh = 0, ow = 0;
    const auto mu_a = filter_valid(pa, a.h, a.w, win, oh, ow);
    const auto mu_b = filter_valid(pb, a.h, a.w, win, oh, ow);
    const auto m_a2 = filter_valid(a2.data(), a.h, a.w, win, oh, ow);
    const auto m_b2 = filter_valid(b2.data(), a.h, a.w, win, oh, ow);
    const auto m_ab = filter_valid(ab.data(), a.h, a.w, win, oh, ow);
    double acc = 0.0;
    for (size_t i = 0; i < mu_a.size(); ++i) {
      const double va = m_a2[i] - mu_a[i] * mu_a[i];
      const double vb = m_b2[i] - mu_b[i] * mu_b[i];
      const double cov = m_ab[i] - mu_a[i] * mu_b[i];
      acc += ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
             ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
    }
    total += acc / static_cast<double>(mu_a.size());
  }
  return total / a.c;
}

namespace {

// Plain 3x3 same-padding convolution, used only by the builtin extractor.
Raster conv3x3(const Raster& x, const std::vector<float>& w, int cout) {
  Raster out(cout, x.h, x.w, ValueRange::unit);
  for (int co = 0; co < cout; ++co)
    for (int y = 0; y < x.h; ++y)
      for (int xx = 0; xx < x.w; ++xx) {
        double acc = 0.0;
        for (int ci = 0; ci < x.c; ++ci)
          for (int ky = -1; ky <= 1; ++ky)
            for (int kx = -1; kx <= 1; ++kx) {
              const int iy = y + ky, ix = xx + kx;
              if (iy < 0 || iy >= x.h || ix < 0 || ix >= x.w) continue;
              acc += w[((static_cast<size_t>(co) * x.c + ci) * 3 + (ky + 1)) * 3 + (kx + 1)] *
                     x.at(ci, iy, ix);
            }
        out.at(co, y, xx) = static_cast<float>(std::max(0.0, acc));  // fused ReLU
      }
  return out;
}

Raster avg_pool2(const Raster& x) {
  Raster out(x.c, x.h / 2, x.w / 2, x.range);
  for (int c = 0; c < x.c; ++c)
    for (int y = 0; y < out.h; ++y)
      for (int xx = 0; xx < out.w; ++xx)
        out.at(c, y, xx) = 0.25f * (x.at(c, 2 * y, 2 * xx) + x.at(c, 2 * y, 2 * xx + 1) +
                                    x.at(c, 2 * y + 1, 2 * xx) + x.at(c, 2 * y + 1, 2 * xx + 1));
  return out;
}

std::vector<float> random_filters(Rng& rng, int cin, int cout) {
  std::vector<float> w(static_cast<size_t>(cout) * cin * 9);
  const double std = std::sqrt(2.0 / (cin * 9.0));
  for (auto& x : w) x = static_cast<float>(rng.normal() * std);
  return w;
}

}  // namespace

FeatureExtractor builtin_feature_extractor() {
  // Frozen filters; the fixed seed makes the proxy reproducible everywhere.
  Rng rng(0xC0FFEEULL);
  auto w0 = std::make_shared<std::vector<float>>(random_filters(rng, 3, 8));
  auto w1 = std::make_shared<std::vector<float>>(random_filters(rng, 8, 16));
  auto w2 = std::make_shared<std::vector<float>>(random_filters(rng, 16, 16));
  return [w0, w1, w2](const Raster& r) {
    std::vector<Raster> feats;
    feats.push_back(conv3x3(r, *w0, 8));
    feats.push_back(conv3x3(avg_pool2(feats[0]), *w1, 16));
    feats.push_back(conv3x3(avg_pool2(feats[1]), *w2, 16));
    return feats;
  };
}

double perceptual_distance(const Raster& a, const Raster& b,
                           const FeatureExtractor& extractor) {
  check_same_shape(a, b, "perceptual_distance");
  const auto fa = extractor(a);
  const auto fb = extractor(b);
  if (fa.size() != fb.size()) throw DomainError("perceptual_distance: pyramid size mismatch");

  double total = 0.0;
  for (size_t s = 0; s < fa.size(); ++s) {
    const Raster& x = fa[s];
    const Raster& y = fb[s];
    check_same_shape(x, y, "perceptual_distance");
    const size_t plane = static_cast<size_t>(x.h) * x.w;
    double acc = 0.0;
    for (size_t p = 0; p < plane; ++p) {
      double nx = 0.0, ny = 0.0;
      for (int c = 0; c < x.c; ++c) {
        nx += static_cast<double>(x.v[static_cast<size_t>(c) * plane + p]) *
              x.v[static_cast<size_t>(c) * plane + p];
        ny += static_cast<double>(y.v[static_cast<size_t>(c) * plane + p]) *
              y.v[static_cast<size_t>(c) * plane + p];
      }
      nx = 1.0 / std::sqrt(nx + 1e-10);
      ny = 1.0 / std::sqrt(ny + 1e-10);
      for (int c = 0; c < x.c; ++c) {
        // Round both normalized features to float before differencing so
        // identical inputs give exactly zero (FMA contraction would
        // otherwise leave one-ulp residue).
        const float fxv = static_cast<float>(x.v[static_cast<size_t>(c) * plane + p] * nx);
        const float fyv = static_cast<float>(y.v[static_cast<size_t>(c) * plane + p] * ny);
        const double d = static_cast<double>(fxv) - static_cast<double>(fyv);
        acc += d * d;
      }
    }
    total += acc / (static_cast<double>(plane) * x.c);
  }
  return total / static_cast<double>(fa.size());
}

}  // namespace sitsr
