#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "sitsr/nn/modules.hpp"
#include "sitsr/nn/tape.hpp"
#include "sitsr/rng.hpp"

namespace sitsr::test {

inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

template <class S>
void fill_random(nn::TensorT<S>& t, Rng& rng, double scale = 1.0) {
  for (auto& v : t.v) v = static_cast<S>(rng.normal() * scale);
}

/// Central-difference check of every parameter gradient against the tape's
/// analytic gradients. build must construct the full forward graph and
/// return the scalar loss node. When max_coords > 0, a deterministic subset
/// of coordinates per parameter is probed. Returns the max relative error,
/// with a 1e-4 denominator floor so that analytically-zero gradients are
/// compared at an effective absolute tolerance instead of against finite-
/// difference cancellation noise.
inline double gradcheck(nn::ParamSet<double>& params,
                        const std::function<nn::Var(nn::Tape<double>&)>& build,
                        double step = 1e-5, int max_coords = -1) {
  params.zero_grads();
  {
    nn::Tape<double> tape;
    const nn::Var loss = build(tape);
    tape.backward(loss);
    tape.accumulate_param_grads(1.0);
  }
  const auto eval = [&]() {
    nn::Tape<double> tape;
    return tape.val(build(tape))[0];
  };

  double worst = 0.0;
  Rng coord_rng(0xC00DULL);
  for (size_t p = 0; p < params.count(); ++p) {
    auto& param = params.at(p);
    const int64_t n = param.value.numel();
    std::vector<int64_t> coords;
    if (max_coords <= 0 || n <= max_coords) {
      coords.resize(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) coords[static_cast<size_t>(i)] = i;
    } else {
      for (int i = 0; i < max_coords; ++i)
        coords.push_back(coord_rng.randint(0, n - 1));
    }
    for (int64_t i : coords) {
      const double orig = param.value[i];
      param.value[i] = orig + step;
      const double lp = eval();
      param.value[i] = orig - step;
      const double lm = eval();
      param.value[i] = orig;
      const double fd = (lp - lm) / (2.0 * step);
      worst = std::max(worst, rel_err(fd, param.grad[i], 1e-4));
    }
  }
  return worst;
}

/// Plain quadruple-loop conv2d used as the oracle for the GEMM path.
template <class S>
nn::TensorT<S> naive_conv2d(const nn::TensorT<S>& x, const nn::TensorT<S>& w,
                            const nn::TensorT<S>* b, int stride, int pad, int groups) {
  const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), ww = x.dim(3);
  const int cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int ho = (h + 2 * pad - kh) / stride + 1;
  const int wo = (ww + 2 * pad - kw) / stride + 1;
  const int cing = cin / groups, coutg = cout / groups;
  nn::TensorT<S> y({n, cout, ho, wo});
  for (int ni = 0; ni < n; ++ni)
    for (int co = 0; co < cout; ++co) {
      const int g = co / coutg;
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) {
          double acc = b ? static_cast<double>((*b)[co]) : 0.0;
          for (int ci = 0; ci < cing; ++ci)
            for (int ky = 0; ky < kh; ++ky)
              for (int kx = 0; kx < kw; ++kx) {
                const int iy = oy * stride - pad + ky;
                const int ix = ox * stride - pad + kx;
                if (iy < 0 || iy >= h || ix < 0 || ix >= ww) continue;
                acc += static_cast<double>(
                           x[((static_cast<int64_t>(ni) * cin + g * cing + ci) * h + iy) * ww +
                             ix]) *
                       w[((static_cast<int64_t>(co) * cing + ci) * kh + ky) * kw + kx];
              }
          y[((static_cast<int64_t>(ni) * cout + co) * ho + oy) * wo + ox] = static_cast<S>(acc);
        }
    }
  return y;
}

}  // namespace sitsr::test
