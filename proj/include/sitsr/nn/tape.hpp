#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sitsr/nn/tensor.hpp"

namespace sitsr::nn {

/// Learned tensor with its gradient accumulator. Owned by a ParamSet;
/// tapes only borrow pointers.
template <class S>
struct Param {
  std::string name;
  TensorT<S> value;
  TensorT<S> grad;
};

struct Var {
  int id = -1;
};

/// Reverse-mode autodiff tape. Ops append nodes; backward() walks the nodes
/// in reverse creation order. Convolutions run as im2col + Eigen GEMM.
/// A tape is single-threaded; batch parallelism uses one tape per sample
/// with gradients merged afterwards in a fixed order.
template <class S>
class Tape {
 public:
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MapM = Eigen::Map<Mat>;
  using CMapM = Eigen::Map<const Mat>;

  struct Node {
    TensorT<S> val;
    TensorT<S> grad;
    std::function<void(Tape&, int)> back;
    Param<S>* bound = nullptr;
    bool needs = false;
  };

  const TensorT<S>& val(Var x) const { return nodes_[static_cast<size_t>(x.id)].val; }
  TensorT<S>& grad(Var x) { return nodes_[static_cast<size_t>(x.id)].grad; }
  bool needs_grad(Var x) const { return nodes_[static_cast<size_t>(x.id)].needs; }
  size_t size() const { return nodes_.size(); }

  Var input(TensorT<S> v) {
    Node n;
    n.val = std::move(v);
    n.needs = false;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  Var param(Param<S>& p) {
    Node n;
    n.val = p.value;
    n.bound = &p;
    n.needs = true;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  // ---- element-wise ----

  Var add(Var a, Var b, S alpha = S(1)) {
    const auto& av = val(a);
    const auto& bv = val(b);
    if (av.shape != bv.shape) throw DomainError("add: shape mismatch");
    TensorT<S> out = av;
    for (int64_t i = 0; i < out.numel(); ++i) out[i] += alpha * bv[i];
    return make(std::move(out), {a, b}, [a, b, alpha](Tape& t, int id) {
      const auto& g = t.node(id).grad;
      if (t.needs_grad(a)) {
        auto& ga = t.ensure_grad(a);
        for (int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
      }
      if (t.needs_grad(b)) {
        auto& gb = t.ensure_grad(b);
        for (int64_t i = 0; i < g.numel(); ++i) gb[i] += alpha * g[i];
      }
    });
  }

  Var scale(Var x, S c) {
    TensorT<S> out = val(x);
    for (auto& e : out.v) e *= c;
    return make(std::move(out), {x}, [x, c](Tape& t, int id) {
      const auto& g = t.node(id).grad;
      if (!t.needs_grad(x)) return;
      auto& gx = t.ensure_grad(x);
      for (int64_t i = 0; i < g.numel(); ++i) gx[i] += c * g[i];
    });
  }

  Var relu(Var x) {
    TensorT<S> out = val(x);
    for (auto& e : out.v) e = e > S(0) ? e : S(0);
    return make(std::move(out), {x}, [x](Tape& t, int id) {
      if (!t.needs_grad(x)) return;
      const auto& g = t.node(id).grad;
      const auto& y = t.node(id).val;
      auto& gx = t.ensure_grad(x);
      for (int64_t i = 0; i < g.numel(); ++i)
        if (y[i] > S(0)) gx[i] += g[i];
    });
  }

  Var leaky_relu(Var x, S slope = S(0.2)) {
    TensorT<S> out = val(x);
    for (auto& e : out.v) e = e > S(0) ? e : slope * e;
    return make(std::move(out), {x}, [x, slope](Tape& t, int id) {
      if (!t.needs_grad(x)) return;
      const auto& g = t.node(id).grad;
      const auto& y = t.node(id).val;
      auto& gx = t.ensure_grad(x);
      for (int64_t i = 0; i < g.numel(); ++i)
        gx[i] += (y[i] > S(0) ? g[i] : slope * g[i]);
    });
  }

  Var silu(Var x) {
    const auto& xv = val(x);
    TensorT<S> out = xv;
    for (auto& e : out.v) e = e / (S(1) + std::exp(-e));
    return make(std::move(out), {x}, [x](Tape& t, int id) {
      if (!t.needs_grad(x)) return;
      const auto& g = t.node(id).grad;
      const auto& xv = t.val(Var{x.id});
      auto& gx = t.ensure_grad(x);
      for (int64_t i = 0; i < g.numel(); ++i) {
        const S s = S(1) / (S(1) + std::exp(-xv[i]));
        gx[i] += g[i] * s * (S(1) + xv[i] * (S(1) - s));
      }
    });
  }

  // ---- shape / broadcast ----

  Var concat(const std::vector<Var>& xs) {
    if (xs.empty()) throw DomainError("concat: empty list");
    const auto& first = val(xs[0]);
    if (first.rank() != 4) throw DomainError("concat: rank-4 tensors expected");
    int ctotal = 0;
    for (Var x : xs) {
      const auto& v = val(x);
      if (v.dim(0) != first.dim(0) || v.dim(2) != first.dim(2) || v.dim(3) != first.dim(3))
        throw DomainError("concat: N/H/W mismatch");
      ctotal += v.dim(1);
    }
    const int n = first.dim(0), h = first.dim(2), w = first.dim(3);
    const int64_t hw = static_cast<int64_t>(h) * w;
    TensorT<S> out({n, ctotal, h, w});
    int coff = 0;
    for (Var x : xs) {
      const auto& v = val(x);
      const int cx = v.dim(1);
      for (int ni = 0; ni < n; ++ni)
        std::copy(v.data() + (static_cast<int64_t>(ni) * cx) * hw,
                  v.data() + (static_cast<int64_t>(ni) * cx + cx) * hw,
                  out.data() + (static_cast<int64_t>(ni) * ctotal + coff) * hw);
      coff += cx;
    }
    std::vector<Var> parents = xs;
    return make(std::move(out), parents, [parents, n, ctotal, hw](Tape& t, int id) {
      const auto& g = t.node(id).grad;
      int coff = 0;
      for (Var x : parents) {
        const int cx = t.val(x).dim(1);
        if (t.needs_grad(x)) {
          auto& gx = t.ensure_grad(x);
          for (int ni = 0; ni < n; ++ni) {
            const S* src = g.data() + (static_cast<int64_t>(ni) * ctotal + coff) * hw;
            S* dst = gx.data() + (static_cast<int64_t>(ni) * cx) * hw;
            for (int64_t i = 0; i < cx * hw; ++i) dst[i] += src[i];
          }
        }
        coff += cx;
      }
    });
  }

  /// y[k] = x[idx[k]] along the frame axis; duplicate indices allowed.
  Var gather_frames(Var x, std::vector<int> idx) {
    const auto& v = val(x);
    if (v.rank() != 4) throw DomainError("gather_frames: rank-4 expected");
    const int64_t fs = v.numel() / v.dim(0);
    TensorT<S> out({static_cast<int>(idx.size()), v.dim(1), v.dim(2), v.dim(3)});
    for (size_t k = 0; k < idx.size(); ++k)
      std::copy(v.data() + idx[k] * fs, v.data() + (idx[k] + 1) * fs,
                out.data() + static_cast<int64_t>(k) * fs);
    return make(std::move(out), {x}, [x, idx, fs](Tape& t, int id) {
      if (!t.needs_grad(x)) return;
      const auto& g = t.node(id).grad;
      auto& gx = t.ensure_grad(x);
      for (size_t k = 0; k < idx.size(); ++k) {
        const S* src = g.data() + static_cast<int64_t>(k) * fs;
        S* dst = gx.data() + idx[k] * fs;
        for (int64_t i = 0; i < fs; ++i) dst[i] += src[i];
      }
    });
  }

  /// x[1,C,H,W] -> [times,C,H,W].
  Var repeat_frames(Var x, int times) {
    std::vector<int> idx(static_cast<size_t>(times), 0);
    return gather_frames(x, idx);
  }

  /// e[N,G] -> [N,times*G], contents repeated per row block.
  Var tile_rows(Var e, int times) {
    const auto& v = val(e);
    if (v.rank() != 2) throw DomainError("tile_rows: rank-2 expected");
    const int n = v.dim(0), g = v.dim(1);
    TensorT<S> out({n, times * g});
    for (int ni = 0; ni < n; ++ni)
      for (int t = 0; t < times; ++t)
        for (int gi = 0; gi < g; ++gi)
          out[(static_cast<int64_t>(ni) * times + t) * g + gi] = v[static_cast<int64_t>(ni) * g + gi];
    return make(std::move(out), {e}, [e, n, g, times](Tape& t, int id) {
      if (!t.needs_grad(e)) return;
      const auto& gr = t.node(id).grad;
      auto& ge = t.ensure_grad(e);
      for (int ni = 0; ni < n; ++ni)
        for (int ti = 0; ti < times; ++ti)
          for (int gi = 0; gi < g; ++gi)
            ge[static_cast<int64_t>(ni) * g + gi] +=
                gr[(static_cast<int64_t>(ni) * times + ti) * g + gi];
    });
  }

  /// y[n,c,h,w] = x[n,c,h,w] + e[n,c].
  Var add_row_broadcast(Var x, Var e) {
    const auto& xv = val(x);
    const auto& ev = val(e);
    if (xv.rank() != 4 || ev.rank() != 2 || ev.dim(0) != xv.dim(0) || ev.dim(1) != xv.dim(1))
      throw DomainError("add_row_broadcast: shape mismatch");
    const int n = xv.dim(0), c = xv.dim(1);
    const int64_t hw = static_cast<int64_t>(xv.dim(2)) * xv.dim(3);
    TensorT<S> out = xv;
    for (int ni = 0; ni < n; ++ni)
      for (int ci = 0; ci < c; ++ci) {
        const S b = ev[static_cast<int64_t>(ni) * c + ci];
        S* p = out.data() + (static_cast<int64_t>(ni) * c + ci) * hw;
        for (int64_t i = 0; i < hw; ++i) p[i] += b;
      }
    return make(std::move(out), {x, e}, [x, e, n, c, hw](Tape& t, int id) {
      const auto& g = t.node(id).grad;
      if (t.needs_grad(x)) {
        auto& gx = t.ensure_grad(x);
        for (int64_t i = 0; i < g.numel(); ++i) gx[i] += g[i];
      }
      if (t.needs_grad(e)) {
        auto& ge = t.ensure_grad(e);
        for (int ni = 0; ni < n; ++ni)
          for (int ci = 0; ci < c; ++ci) {
            const S* p = g.data() + (static_cast<int64_t>(ni) * c + ci) * hw;
            S acc = S(0);
            for (int64_t i = 0; i < hw; ++i) acc += p[i];
            ge[static_cast<int64_t>(ni) * c + ci] += acc;
          }
      }
    });
  }

  /// y[n,c,h,w] = x[n,c,h,w] + e[0,c]  (shared across frames).
  Var add_chan_broadcast(Var x, Var e) {
    const auto& xv = val(x);
    const auto& ev = val(e);
    if (xv.rank() != 4 || ev.numel() != xv.dim(1))
      throw DomainError("add_chan_broadcast: shape mismatch");
    const int n = xv.dim(0), c = xv.dim(1);
    const int64_t hw = static_cast<int64_t>(xv.dim(2)) * xv.dim(3);
    TensorT<S> out = xv;
    for (int ni = 0; ni < n; ++ni)
      for (int ci = 0; ci < c; ++ci) {
        const S b = ev[ci];
        S* p = out.data() + (static_cast<int64_t>(ni) * c + ci) * hw;
        for (int64_t i = 0; i < hw; ++i) p[i] += b;
      }
    return make(std::move(out), {x, e}, [x, e, n, c, hw](Tape& t, int id) {
      const auto& g = t.node(id).grad;
      if (t.needs_grad(x)) {
        auto& gx = t.ensure_grad(x);
        for (int64_t i = 0; i < g.numel(); ++i) gx[i] += g[i];
      }
      if (t.needs_grad(e)) {
        auto& ge = t.ensure_grad(e);
        for (int ni = 0; ni < n; ++ni)
          for (int ci = 0; ci < c; ++ci) {
            const S* p = g.data() + (static_cast<int64_t>(ni) * c + ci) * hw;
            S acc = S(0);
            for (int64_t i = 0; i < hw; ++i) acc += p[i];
            ge[ci] += acc;
          }
      }
    });
  }

  /// y[n,c,h,w] = x[n,c,h,w] * e[0,c]  (shared across frames).
  Var mul_chan_broadcast(Var x, Var e) {
    const auto& xv = val(x);
    const auto& ev = val(e);
    if (xv.rank() != 4 || ev.numel() != xv.dim(1))
      throw DomainError("mul_chan_broadcast: shape mismatch");
    const int n = xv.dim(0), c = xv.dim(1);
    const int64_t hw = static_cast<int64_t>(xv.dim(2)) * xv.dim(3);
    TensorT<S> out = xv;
    for (int ni = 0; ni < n; ++ni)
      for (int ci = 0; ci < c; ++ci) {
        const S m = ev[ci];
        S* p = out.data() + (static_cast<int64_t>(ni) * c + ci) * hw;
        for (int64_t i = 0; i < hw; ++i) p[i] *= m;
      }
    return make(std::move(out), {x, e}, [x, e, n, c, hw](Tape& t, int id) {
      const auto& g = t.node(id).grad;
      const auto& xv = t.val(x);
      const auto& ev = t.val(e);
      if (t.needs_grad(x)) {
        auto& gx = t.ensure_grad(x);
        for (int ni = 0; ni < n; ++ni)
          for (int ci = 0; ci < c; ++ci) {
            const S m = ev[ci];
            const int64_t off = (static_cast<int64_t>(ni) * c + ci) * hw;
            for (int64_t i = 0; i < hw; ++i) gx[off + i] += m * g[off + i];
          }
      }
      if (t.needs_grad(e)) {
        auto& ge = t.ensure_grad(e);
        for (int ni = 0; ni < n; ++ni)
          for (int ci = 0; ci < c; ++ci) {
            const int64_t off = (static_cast<int64_t>(ni) * c + ci) * hw;
            S acc = S(0);
            for (int64_t i = 0; i < hw; ++i) acc += xv[off + i] * g[off + i];
            ge[ci] += acc;
          }
      }
    });
  }

  /// Same data under a new shape; gradients pass straight through.
  Var reshape(Var x, std::vector<int> shape) {
    TensorT<S> out = val(x).reshaped(std::move(shape));
    return make(std::move(out), {x}, [x](Tape& t, int id) {
      if (!t.needs_grad(x)) return;
      const auto& g = t.node(id).grad;
      auto& gx = t.ensure_grad(x);
      for (int64_t i = 0; i < g.numel(); ++i) gx[i] += g[i];
    });
  }

  /// Rows [begin, begin+count) of a rank-2 tensor.
  Var slice_rows(Var x, int begin, int count) {
    const auto& v = val(x);
    if (v.rank() != 2 || begin < 0 || begin + count > v.dim(0))
      throw DomainError("slice_rows: bad range");
    const int d = v.dim(1);
    TensorT<S> out({count, d});
    std::copy(v.data() + static_cast<int64_t>(begin) * d,
              v.data() + static_cast<int64_t>(begin + count) * d, out.data());
    return make(std::move(out), {x}, [x, begin, count, d](Tape& t, int id) {
      if (!t.needs_grad(x)) return;
      const auto& g = t.node(id).grad;
      auto& gx = t.ensure_grad(x);
      for (int64_t i = 0; i < static_cast<int64_t>(count) * d; ++i)
        gx[static_cast<int64_t>(begin) * d + i] += g[i];
    });
  }

  /// [N,4C,H,W] -> [N,C,2H,2W].
  Var pixel_shuffle2(Var x) {
    const auto& v = val(x);
    if (v.rank() != 4 || v.dim(1) % 4 != 0) throw DomainError("pixel_shuffle2: C % 4 != 0");
    const int n = v.dim(0), c = v.dim(1) / 4, h = v.dim(2), w = v.dim(3);
    TensorT<S> out({n, c, 2 * h, 2 * w});
    for (int ni = 0; ni < n; ++ni)
      for (int ci = 0; ci < c; ++ci)
        for (int di = 0; di < 2; ++di)
          for (int dj = 0; dj < 2; ++dj) {
            const S* src = v.data() +
                ((static_cast<int64_t>(ni) * 4 * c + ci * 4 + di * 2 + dj) * h) * w;
            for (int y = 0; y < h; ++y)
              for (int xw = 0; xw < w; ++xw)
                out[(((static_cast<int64_t>(ni) * c + ci) * 2 * h + 2 * y + di) * 2 * w) +
                    2 * xw + dj] = src[static_cast<int64_t>(y) * w + xw];
          }
    return make(std::move(out), {x}, [x, n, c, h, w](Tape& t, int id) {
      if (!t.needs_grad(x)) return;
      const auto& g = t.node(id).grad;
      auto& gx = t.ensure_grad(x);
      for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci)
          for (int di = 0; di < 2; ++di)
            for (int dj = 0; dj < 2; ++dj) {
              S* dst = gx.data() +
                  ((static_cast<int64_t>(ni) * 4 * c + ci * 4 + di * 2 + dj) * h) * w;
              for (int y = 0; y < h; ++y)
                for (int xw = 0; xw < w; ++xw)
                  dst[static_cast<int64_t>(y) * w + xw] +=
                      g[(((static_cast<int64_t>(ni) * c + ci) * 2 * h + 2 * y + di) * 2 * w) +
                        2 * xw + dj];
            }
    });
  }

  Var nearest_up2(Var x) {
    const auto& v = val(x);
    if (v.rank() != 4) throw DomainError("nearest_up2: rank-4 expected");
    const int n = v.dim(0), c = v.dim(1), h = v.dim(2), w = v.dim(3);
    TensorT<S> out({n, c, 2 * h, 2 * w});
    for (int64_t nc = 0; nc < static_cast<int64_t>(n) * c; ++nc) {
      const S* src = v.data() + nc * h * w;
      S* dst = out.data() + nc * 4 * h * w;
      for (int y = 0; y < h; ++y)
        for (int xw = 0; xw < w; ++xw) {
          const S e = src[static_cast<int64_t>(y) * w + xw];
          dst[(static_cast<int64_t>(2 * y)) * 2 * w + 2 * xw] = e;
          dst[(static_cast<int64_t>(2 * y)) * 2 * w + 2 * xw + 1] = e;
          dst[(static_cast<int64_t>(2 * y + 1)) * 2 * w + 2 * xw] = e;
          dst[(static_cast<int64_t>(2 * y + 1)) * 2 * w + 2 * xw + 1] = e;
        }
    }
    return make(std::move(out), {x}, [x, n, c, h, w](Tape& t, int id) {
      if (!t.needs_grad(x)) return;
      const auto& g = t.node(id).grad;
      auto& gx = t.ensure_grad(x);
      for (int64_t nc = 0; nc < static_cast<int64_t>(n) * c; ++nc) {
        const S* src = g.data() + nc * 4 * h * w;
        S* dst = gx.data() + nc * h * w;
        for (int y = 0; y < h; ++y)
          for (int xw = 0; xw < w; ++xw)
            dst[static_cast<int64_t>(y) * w + xw] +=
                src[(static_cast<int64_t>(2 * y)) * 2 * w + 2 * xw] +
                src[(static_cast<int64_t>(2 * y)) * 2 * w + 2 * xw + 1] +
                src[(static_cast<int64_t>(2 * y + 1)) * 2 * w + 2 * xw] +
                src[(static_cast<int64_t>(2 * y + 1)) * 2 * w + 2 * xw + 1];
      }
    });
  }

  // ---- linear algebra ----

  /// x[N,D] * w[M,D]^T + b -> [N,M].
  Var linear(Var x, Var w, Var b = Var{-1}) {
    const auto& xv = val(x);
    const auto& wv = val(w);
    if (xv.rank() != 2 || wv.rank() != 2 || xv.dim(1) != wv.dim(1))
      throw DomainError("linear: shape mismatch");
    const int n = xv.dim(0), d = xv.dim(1), m = wv.dim(0);
    TensorT<S> out({n, m});
    CMapM xm(xv.data(), n, d), wm(wv.data(), m, d);
    MapM ym(out.data(), n, m);
    ym.noalias() = xm * wm.transpose();
    if (b.id >= 0) {
      const auto& bv = val(b);
      if (bv.numel() != m) throw DomainError("linear: bias size mismatch");
      for (int ni = 0; ni < n; ++ni)
        for (int mi = 0; mi < m; ++mi) out[static_cast<int64_t>(ni) * m + mi] += bv[mi];
    }
    std::vector<Var> parents = b.id >= 0 ? std::vector<Var>{x, w, b} : std::vector<Var>{x, w};
    return make(std::move(out), parents, [x, w, b, n, d, m](Tape& t, int id) {
      const auto& g = t.node(id).grad;
      CMapM gm(g.data(), n, m);
      if (t.needs_grad(x)) {
        CMapM wm(t.val(w).data(), m, d);
        MapM gxm(t.ensure_grad(x).data(), n, d);
        gxm.noalias() += gm * wm;
      }
      if (t.needs_grad(w)) {
        CMapM xm(t.val(x).data(), n, d);
        MapM gwm(t.ensure_grad(w).data(), m, d);
        gwm.noalias() += gm.transpose() * xm;
      }
      if (b.id >= 0 && t.needs_grad(b)) {
        auto& gb = t.ensure_grad(b);
        for (int ni = 0; ni < n; ++ni)
          for (int mi = 0; mi < m; ++mi) gb[mi] += g[static_cast<int64_t>(ni) * m + mi];
      }
    });
  }

  /// x[N,Cin,H,W], w[Cout,Cin/groups,kh,kw] -> [N,Cout,Ho,Wo].
  Var conv2d(Var x, Var w, Var b = Var{-1}, int stride = 1, int pad = 0, int groups = 1) {
    const auto& xv = val(x);
    const auto& wv = val(w);
    if (xv.rank() != 4 || wv.rank() != 4) throw DomainError("conv2d: rank-4 expected");
    const int n = xv.dim(0), cin = xv.dim(1), h = xv.dim(2), ww = xv.dim(3);
    const int cout = wv.dim(0), cing = wv.dim(1), kh = wv.dim(2), kw = wv.dim(3);
    if (cin % groups != 0 || cout % groups != 0 || cing != cin / groups)
      throw ConfigError("conv2d: channel/group mismatch");
    const int ho = (h + 2 * pad - kh) / stride + 1;
    const int wo = (ww + 2 * pad - kw) / stride + 1;
    if (ho < 1 || wo < 1) throw DomainError("conv2d: output would be empty");

    const int64_t k = static_cast<int64_t>(cin) * kh * kw;
    const int64_t kg = k / groups;
    const int64_t p = static_cast<int64_t>(ho) * wo;
    const int coutg = cout / groups;

    auto cols = std::make_shared<std::vector<S>>(static_cast<size_t>(n) * k * p);
    TensorT<S> out({n, cout, ho, wo});
    for (int ni = 0; ni < n; ++ni) {
      S* col = cols->data() + static_cast<int64_t>(ni) * k * p;
      im2col(xv.data() + static_cast<int64_t>(ni) * cin * h * ww, cin, h, ww, kh, kw, stride,
             pad, ho, wo, col);
      for (int g = 0; g < groups; ++g) {
        CMapM wm(wv.data() + static_cast<int64_t>(g) * coutg * kg, coutg, kg);
        CMapM cm(col + g * kg * p, kg, p);
        MapM ym(out.data() + (static_cast<int64_t>(ni) * cout + g * coutg) * p, coutg, p);
        ym.noalias() = wm * cm;
      }
    }
    if (b.id >= 0) {
      const auto& bv = val(b);
      if (bv.numel() != cout) throw DomainError("conv2d: bias size mismatch");
      for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < cout; ++ci) {
          S* dst = out.data() + (static_cast<int64_t>(ni) * cout + ci) * p;
          const S bb = bv[ci];
          for (int64_t i = 0; i < p; ++i) dst[i] += bb;
        }
    }

    std::vector<Var> parents = b.id >= 0 ? std::vector<Var>{x, w, b} : std::vector<Var>{x, w};
    auto back = [x, w, b, n, cin, h, ww, cout, kh, kw, stride, pad, ho, wo, groups, k, kg, p,
                 coutg, cols](Tape& t, int id) {
      const auto& g = t.node(id).grad;
      const bool nx = t.needs_grad(x), nw = t.needs_grad(w);
      std::vector<S> dcol;
      if (nx) dcol.resize(static_cast<size_t>(k) * p);
      for (int ni = 0; ni < n; ++ni) {
        const S* col = cols->data() + static_cast<int64_t>(ni) * k * p;
        for (int gi = 0; gi < groups; ++gi) {
          CMapM gm(g.data() + (static_cast<int64_t>(ni) * cout + gi * coutg) * p, coutg, p);
          if (nw) {
            MapM gwm(t.ensure_grad(w).data() + static_cast<int64_t>(gi) * coutg * kg, coutg, kg);
            CMapM cm(col + gi * kg * p, kg, p);
            gwm.noalias() += gm * cm.transpose();
          }
          if (nx) {
            CMapM wm(t.val(w).data() + static_cast<int64_t>(gi) * coutg * kg, coutg, kg);
            MapM dcm(dcol.data() + gi * kg * p, kg, p);
            dcm.noalias() = wm.transpose() * gm;
          }
        }
        if (nx)
          col2im(dcol.data(), cin, h, ww, kh, kw, stride, pad, ho, wo,
                 t.ensure_grad(x).data() + static_cast<int64_t>(ni) * cin * h * ww);
      }
      if (b.id >= 0 && t.needs_grad(b)) {
        auto& gb = t.ensure_grad(b);
        for (int ni = 0; ni < n; ++ni)
          for (int ci = 0; ci < cout; ++ci) {
            const S* src = g.data() + (static_cast<int64_t>(ni) * cout + ci) * p;
            S acc = S(0);
            for (int64_t i = 0; i < p; ++i) acc += src[i];
            gb[ci] += acc;
          }
      }
    };
    return make(std::move(out), parents, std::move(back));
  }

  /// x[N,Cin,H,W], w[Cin,Cout,kh,kw] -> [N,Cout,(H-1)s-2p+kh, (W-1)s-2p+kw].
  Var conv_transpose2d(Var x, Var w, Var b = Var{-1}, int stride = 2, int pad = 1) {
    const auto& xv = val(x);
    const auto& wv = val(w);
    if (xv.rank() != 4 || wv.rank() != 4 || xv.dim(1) != wv.dim(0))
      throw DomainError("conv_transpose2d: shape mismatch");
    const int n = xv.dim(0), cin = xv.dim(1), h = xv.dim(2), ww = xv.dim(3);
    const int cout = wv.dim(1), kh = wv.dim(2), kw = wv.dim(3);
    const int ho = (h - 1) * stride - 2 * pad + kh;
    const int wo = (ww - 1) * stride - 2 * pad + kw;
    const int64_t k = static_cast<int64_t>(cout) * kh * kw;
    const int64_t pin = static_cast<int64_t>(h) * ww;

    TensorT<S> out({n, cout, ho, wo});
    std::vector<S> tmp(static_cast<size_t>(k) * pin);
    for (int ni = 0; ni < n; ++ni) {
      CMapM wm(wv.data(), cin, k);
      CMapM xm(xv.data() + static_cast<int64_t>(ni) * cin * pin, cin, pin);
      MapM tm(tmp.data(), k, pin);
      tm.noalias() = wm.transpose() * xm;
      // tmp holds "columns" of the output image; scatter them back.
      col2im(tmp.data(), cout, ho, wo, kh, kw, stride, pad, h, ww,
             out.data() + static_cast<int64_t>(ni) * cout * ho * wo);
    }
    if (b.id >= 0) {
      const auto& bv = val(b);
      if (bv.numel() != cout) throw DomainError("conv_transpose2d: bias size mismatch");
      const int64_t po = static_cast<int64_t>(ho) * wo;
      for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < cout; ++ci) {
          S* dst = out.data() + (static_cast<int64_t>(ni) * cout + ci) * po;
          for (int64_t i = 0; i < po; ++i) dst[i] += bv[ci];
        }
    }

    std::vector<Var> parents = b.id >= 0 ? std::vector<Var>{x, w, b} : std::vector<Var>{x, w};
    auto back = [x, w, b, n, cin, h, ww, cout, kh, kw, stride, pad, ho, wo, k,
                 pin](Tape& t, int id) {
      const auto& g = t.node(id).grad;
      const bool nx = t.needs_grad(x), nw = t.needs_grad(w);
      std::vector<S> col(static_cast<size_t>(k) * pin);
      for (int ni = 0; ni < n; ++ni) {
        im2col(g.data() + static_cast<int64_t>(ni) * cout * ho * wo, cout, ho, wo, kh, kw,
               stride, pad, h, ww, col.data());
        CMapM cm(col.data(), k, pin);
        if (nx) {
          CMapM wm(t.val(w).data(), cin, k);
          MapM gxm(t.ensure_grad(x).data() + static_cast<int64_t>(ni) * cin * pin, cin, pin);
          gxm.noalias() += wm * cm;
        }
        if (nw) {
          CMapM xm(t.val(x).data() + static_cast<int64_t>(ni) * cin * pin, cin, pin);
          MapM gwm(t.ensure_grad(w).data(), cin, k);
          gwm.noalias() += xm * cm.transpose();
        }
      }
      if (b.id >= 0 && t.needs_grad(b)) {
        auto& gb = t.ensure_grad(b);
        const int64_t po = static_cast<int64_t>(ho) * wo;
        for (int ni = 0; ni < n; ++ni)
          for (int ci = 0; ci < cout; ++ci) {
            const S* src = g.data() + (static_cast<int64_t>(ni) * cout + ci) * po;
            S acc = S(0);
            for (int64_t i = 0; i < po; ++i) acc += src[i];
            gb[ci] += acc;
          }
      }
    };
    return make(std::move(out), parents, std::move(back));
  }

  // ---- attention ----

  /// Softmax over the frame axis of [T,C,H,W], computed per (c,h,w) with
  /// max subtraction.
  Var softmax_frames(Var x) {
    const auto& v = val(x);
    if (v.rank() != 4) throw DomainError("softmax_frames: rank-4 expected");
    const int tt = v.dim(0);
    const int64_t cols = v.numel() / tt;
    TensorT<S> out = v;
    for (int64_t j = 0; j < cols; ++j) {
      S mx = v[j];
      for (int t = 1; t < tt; ++t) mx = std::max(mx, v[t * cols + j]);
      S sum = S(0);
      for (int t = 0; t < tt; ++t) {
        const S e = std::exp(v[t * cols + j] - mx);
        out[t * cols + j] = e;
        sum += e;
      }
      for (int t = 0; t < tt; ++t) out[t * cols + j] /= sum;
    }
    return make(std::move(out), {x}, [x, tt, cols](Tape& t, int id) {
      if (!t.needs_grad(x)) return;
      const auto& g = t.node(id).grad;
      const auto& y = t.node(id).val;
      auto& gx = t.ensure_grad(x);
      for (int64_t j = 0; j < cols; ++j) {
        S dot = S(0);
        for (int ti = 0; ti < tt; ++ti) dot += y[ti * cols + j] * g[ti * cols + j];
        for (int ti = 0; ti < tt; ++ti)
          gx[ti * cols + j] += y[ti * cols + j] * (g[ti * cols + j] - dot);
      }
    });
  }

  /// Convex combination over frames: weights[T,H,Hf,Wf], values[T,C,Hf,Wf],
  /// channel group c belongs to head c / (C/H). Output [1,C,Hf,Wf].
  Var attn_mix(Var weights, Var values) {
    const auto& av = val(weights);
    const auto& vv = val(values);
    if (av.rank() != 4 || vv.rank() != 4 || av.dim(0) != vv.dim(0) ||
        av.dim(2) != vv.dim(2) || av.dim(3) != vv.dim(3))
      throw DomainError("attn_mix: shape mismatch");
    const int tt = av.dim(0), heads = av.dim(1), c = vv.dim(1);
    if (c % heads != 0) throw ConfigError("attn_mix: C % heads != 0");
    const int gsize = c / heads;
    const int64_t hw = static_cast<int64_t>(av.dim(2)) * av.dim(3);
    TensorT<S> out({1, c, av.dim(2), av.dim(3)});
    for (int ti = 0; ti < tt; ++ti)
      for (int ci = 0; ci < c; ++ci) {
        const int hh = ci / gsize;
        const S* a = av.data() + (static_cast<int64_t>(ti) * heads + hh) * hw;
        const S* vi = vv.data() + (static_cast<int64_t>(ti) * c + ci) * hw;
        S* o = out.data() + static_cast<int64_t>(ci) * hw;
        for (int64_t i = 0; i < hw; ++i) o[i] += a[i] * vi[i];
      }
    return make(std::move(out), {weights, values},
                [weights, values, tt, heads, c, gsize, hw](Tape& t, int id) {
      const auto& g = t.node(id).grad;
      const auto& av = t.val(weights);
      const auto& vv = t.val(values);
      if (t.needs_grad(values)) {
        auto& gv = t.ensure_grad(values);
        for (int ti = 0; ti < tt; ++ti)
          for (int ci = 0; ci < c; ++ci) {
            const int hh = ci / gsize;
            const S* a = av.data() + (static_cast<int64_t>(ti) * heads + hh) * hw;
            const S* go = g.data() + static_cast<int64_t>(ci) * hw;
            S* dst = gv.data() + (static_cast<int64_t>(ti) * c + ci) * hw;
            for (int64_t i = 0; i < hw; ++i) dst[i] += a[i] * go[i];
          }
      }
      if (t.needs_grad(weights)) {
        auto& ga = t.ensure_grad(weights);
        for (int ti = 0; ti < tt; ++ti)
          for (int ci = 0; ci < c; ++ci) {
            const int hh = ci / gsize;
            const S* vi = vv.data() + (static_cast<int64_t>(ti) * c + ci) * hw;
            const S* go = g.data() + static_cast<int64_t>(ci) * hw;
            S* dst = ga.data() + (static_cast<int64_t>(ti) * heads + hh) * hw;
            for (int64_t i = 0; i < hw; ++i) dst[i] += vi[i] * go[i];
          }
      }
    });
  }

  // ---- losses ----

  /// Mean absolute difference; returns a scalar node of shape [1].
  Var l1_loss(Var pred, Var target) {
    const auto& pv = val(pred);
    const auto& tv = val(target);
    if (pv.shape != tv.shape) throw DomainError("l1_loss: shape mismatch");
    const int64_t n = pv.numel();
    S acc = S(0);
    for (int64_t i = 0; i < n; ++i) acc += std::abs(pv[i] - tv[i]);
    TensorT<S> out({1});
    out[0] = acc / static_cast<S>(n);
    return make(std::move(out), {pred, target}, [pred, target, n](Tape& t, int id) {
      const S g = t.node(id).grad[0] / static_cast<S>(n);
      const auto& pv = t.val(pred);
      const auto& tv = t.val(target);
      if (t.needs_grad(pred)) {
        auto& gp = t.ensure_grad(pred);
        for (int64_t i = 0; i < n; ++i) {
          const S d = pv[i] - tv[i];
          gp[i] += d > S(0) ? g : (d < S(0) ? -g : S(0));
        }
      }
      if (t.needs_grad(target)) {
        auto& gt = t.ensure_grad(target);
        for (int64_t i = 0; i < n; ++i) {
          const S d = pv[i] - tv[i];
          gt[i] -= d > S(0) ? g : (d < S(0) ? -g : S(0));
        }
      }
    });
  }

  /// Scalar probe sum_i w_i x_i; mainly useful as a smooth loss in tests.
  Var weighted_sum(Var x, TensorT<S> w) {
    const auto& xv = val(x);
    if (xv.shape != w.shape) throw DomainError("weighted_sum: shape mismatch");
    TensorT<S> out({1});
    S acc = S(0);
    for (int64_t i = 0; i < xv.numel(); ++i) acc += xv[i] * w[i];
    out[0] = acc;
    auto wp = std::make_shared<TensorT<S>>(std::move(w));
    return make(std::move(out), {x}, [x, wp](Tape& t, int id) {
      if (!t.needs_grad(x)) return;
      const S g = t.node(id).grad[0];
      auto& gx = t.ensure_grad(x);
      for (int64_t i = 0; i < gx.numel(); ++i) gx[i] += g * (*wp)[i];
    });
  }

  // ---- engine ----

  void backward(Var loss) {
    Node& ln = node(loss.id);
    if (ln.val.numel() != 1) throw DomainError("backward: loss must be scalar");
    ensure_grad(loss).fill(S(1));
    for (int i = loss.id; i >= 0; --i) {
      Node& nd = nodes_[static_cast<size_t>(i)];
      if (nd.back && nd.grad.numel() != 0) nd.back(*this, i);
    }
  }

  /// Adds scale * (tape-local parameter gradients) into the bound Params.
  /// Called serially when merging per-sample tapes.
  void accumulate_param_grads(S sc = S(1)) {
    for (auto& nd : nodes_) {
      if (nd.bound == nullptr || nd.grad.numel() == 0) continue;
      auto& dst = nd.bound->grad;
      for (int64_t i = 0; i < nd.grad.numel(); ++i) dst[i] += sc * nd.grad[i];
    }
  }

  Node& node(int id) { return nodes_[static_cast<size_t>(id)]; }

  TensorT<S>& ensure_grad(Var x) { return ensure_grad(x.id); }
  TensorT<S>& ensure_grad(int id) {
    Node& nd = node(id);
    if (nd.grad.numel() == 0) nd.grad = TensorT<S>(nd.val.shape);
    return nd.grad;
  }

 private:
  Var make(TensorT<S> out, const std::vector<Var>& parents,
           std::function<void(Tape&, int)> back) {
    Node n;
    n.val = std::move(out);
    for (Var p : parents)
      if (p.id >= 0 && nodes_[static_cast<size_t>(p.id)].needs) n.needs = true;
    if (n.needs) n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  static void im2col(const S* x, int cin, int h, int w, int kh, int kw, int stride, int pad,
                     int ho, int wo, S* col) {
    const int64_t hw = static_cast<int64_t>(h) * w;
    int64_t r = 0;
    for (int ci = 0; ci < cin; ++ci)
      for (int ky = 0; ky < kh; ++ky)
        for (int kx = 0; kx < kw; ++kx, ++r) {
          S* dst = col + r * ho * wo;
          const S* src = x + ci * hw;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= h) {
              for (int ox = 0; ox < wo; ++ox) dst[static_cast<int64_t>(oy) * wo + ox] = S(0);
              continue;
            }
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * stride - pad + kx;
              dst[static_cast<int64_t>(oy) * wo + ox] =
                  (ix >= 0 && ix < w) ? src[static_cast<int64_t>(iy) * w + ix] : S(0);
            }
          }
        }
  }

  static void col2im(const S* col, int cin, int h, int w, int kh, int kw, int stride, int pad,
                     int ho, int wo, S* x) {
    const int64_t hw = static_cast<int64_t>(h) * w;
    int64_t r = 0;
    for (int ci = 0; ci < cin; ++ci)
      for (int ky = 0; ky < kh; ++ky)
        for (int kx = 0; kx < kw; ++kx, ++r) {
          const S* src = col + r * ho * wo;
          S* dst = x + ci * hw;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= h) continue;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * stride - pad + kx;
              if (ix >= 0 && ix < w) dst[static_cast<int64_t>(iy) * w + ix] += src[static_cast<int64_t>(oy) * wo + ox];
            }
          }
        }
  }

  std::vector<Node> nodes_;
};

}  // namespace sitsr::nn
