// Hand-written network layers with explicit forward/backward passes: flat
// parameter store with Adam state, linear / layer-norm / GELU / multi-head
// attention and a pre-LN transformer encoder. Templated on the scalar so
// training runs in float while gradient checks instantiate double.
#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "cmt/rng.hpp"
#include "cmt/tensor.hpp"

namespace cmt::nn {

struct ParamRef {
  size_t off = 0;
  int rows = 0, cols = 0;
  size_t size() const { return size_t(rows) * cols; }
};

template <typename T>
struct ParamStore {
  std::vector<T> w, g, m, v;
  struct Entry {
    std::string name;
    ParamRef ref;
  };
  std::vector<Entry> entries;
  int64_t adam_steps = 0;

  ParamRef add(const std::string& name, int rows, int cols) {
    ParamRef r{w.size(), rows, cols};
    size_t n = r.size();
    w.resize(w.size() + n, T(0));
    g.resize(w.size(), T(0));
    m.resize(w.size(), T(0));
    v.resize(w.size(), T(0));
    entries.push_back({name, r});
    return r;
  }

  T* ptr(ParamRef r) { return w.data() + r.off; }
  const T* ptr(ParamRef r) const { return w.data() + r.off; }
  T* grad(ParamRef r) { return g.data() + r.off; }

  void init_normal(ParamRef r, Rng& rng, double scale) {
    T* p = ptr(r);
    for (size_t i = 0; i < r.size(); ++i) p[i] = T(rng.normal() * scale);
  }

  void zero_grad() { std::fill(g.begin(), g.end(), T(0)); }

  void adam_step(double lr, double b1 = 0.9, double b2 = 0.999, double eps = 1e-8) {
    adam_steps += 1;
    const double c1 = 1.0 - std::pow(b1, double(adam_steps));
    const double c2 = 1.0 - std::pow(b2, double(adam_steps));
    const size_t n = w.size();
    T* __restrict__ wp = w.data();
    T* __restrict__ gp = g.data();
    T* __restrict__ mp = m.data();
    T* __restrict__ vp = v.data();
    for (size_t i = 0; i < n; ++i) {
      double grad = double(gp[i]);
      double mi = b1 * double(mp[i]) + (1.0 - b1) * grad;
      double vi = b2 * double(vp[i]) + (1.0 - b2) * grad * grad;
      mp[i] = T(mi);
      vp[i] = T(vi);
      wp[i] = T(double(wp[i]) - lr * (mi / c1) / (std::sqrt(vi / c2) + eps));
    }
  }
};

// --- activations ------------------------------------------------------------

template <typename T>
inline T gelu(T x) {
  return T(0.5) * x * T(1.0 + std::erf(double(x) * (1.0 / std::numbers::sqrt2)));
}

template <typename T>
inline T gelu_grad(T x) {
  double xd = double(x);
  double cdf = 0.5 * (1.0 + std::erf(xd * (1.0 / std::numbers::sqrt2)));
  double pdf = std::exp(-0.5 * xd * xd) / std::sqrt(2.0 * std::numbers::pi);
  return T(cdf + xd * pdf);
}

template <typename T>
void gelu_forward(const Mat<T>& x, Mat<T>& y) {
  if (y.rows != x.rows || y.cols != x.cols) y = Mat<T>(x.rows, x.cols);
  for (size_t i = 0; i < x.size(); ++i) y.a[i] = gelu(x.a[i]);
}

template <typename T>
void gelu_backward(const Mat<T>& x, const Mat<T>& dy, Mat<T>& dx) {
  if (dx.rows != x.rows || dx.cols != x.cols) dx = Mat<T>(x.rows, x.cols);
  for (size_t i = 0; i < x.size(); ++i) dx.a[i] = dy.a[i] * gelu_grad(x.a[i]);
}

// row-wise softmax in place
template <typename T>
void softmax_rows(Mat<T>& s) {
  for (int i = 0; i < s.rows; ++i) {
    T* r = s.row(i);
    T mx = r[0];
    for (int j = 1; j < s.cols; ++j) mx = std::max(mx, r[j]);
    T sum = T(0);
    for (int j = 0; j < s.cols; ++j) {
      r[j] = T(std::exp(double(r[j] - mx)));
      sum += r[j];
    }
    T inv = T(1) / sum;
    for (int j = 0; j < s.cols; ++j) r[j] *= inv;
  }
}

// --- linear -----------------------------------------------------------------

template <typename T>
struct Linear {
  ParamRef W, b;
  int in = 0, out = 0;
  bool has_bias = true;

  void init(ParamStore<T>& ps, const std::string& name, int in_, int out_, Rng& rng,
            bool bias = true) {
    in = in_;
    out = out_;
    has_bias = bias;
    W = ps.add(name + ".w", in, out);
    ps.init_normal(W, rng, 1.0 / std::sqrt(double(in)));
    if (bias) b = ps.add(name + ".b", 1, out);
  }

  Mat<T> forward(const ParamStore<T>& ps, const Mat<T>& x) const {
    Mat<T> y(x.rows, out);
    kern::gemm_nn(x.data(), ps.ptr(W), y.data(), x.rows, in, out);
    if (has_bias) {
      const T* bp = ps.ptr(b);
      for (int i = 0; i < y.rows; ++i) {
        T* r = y.row(i);
        for (int j = 0; j < out; ++j) r[j] += bp[j];
      }
    }
    return y;
  }

  Mat<T> backward(ParamStore<T>& ps, const Mat<T>& x, const Mat<T>& dy) const {
    kern::gemm_tn(x.data(), dy.data(), ps.grad(W), in, x.rows, out, true);
    if (has_bias) {
      T* db = ps.grad(b);
      for (int i = 0; i < dy.rows; ++i) {
        const T* r = dy.row(i);
        for (int j = 0; j < out; ++j) db[j] += r[j];
      }
    }
    Mat<T> dx(x.rows, in);
    kern::gemm_nt(dy.data(), ps.ptr(W), dx.data(), dy.rows, out, in);
    return dx;
  }
};

// --- layer norm ---------------------------------------------------------------

template <typename T>
struct LayerNorm {
  ParamRef gamma, beta;
  int dim = 0;
  static constexpr double kEps = 1e-5;

  struct Cache {
    Mat<T> xhat;
    std::vector<T> inv_std;
  };

  void init(ParamStore<T>& ps, const std::string& name, int dim_) {
    dim = dim_;
    gamma = ps.add(name + ".gamma", 1, dim);
    beta = ps.add(name + ".beta", 1, dim);
    T* gp = ps.ptr(gamma);
    for (int i = 0; i < dim; ++i) gp[i] = T(1);
  }

  Mat<T> forward(const ParamStore<T>& ps, const Mat<T>& x, Cache& c) const {
    c.xhat = Mat<T>(x.rows, dim);
    c.inv_std.resize(x.rows);
    Mat<T> y(x.rows, dim);
    const T* gp = ps.ptr(gamma);
    const T* bp = ps.ptr(beta);
    for (int i = 0; i < x.rows; ++i) {
      const T* r = x.row(i);
      double mu = 0;
      for (int j = 0; j < dim; ++j) mu += double(r[j]);
      mu /= dim;
      double var = 0;
      for (int j = 0; j < dim; ++j) {
        double d = double(r[j]) - mu;
        var += d * d;
      }
      var /= dim;
      T inv = T(1.0 / std::sqrt(var + kEps));
      c.inv_std[i] = inv;
      T* xh = c.xhat.row(i);
      T* yr = y.row(i);
      for (int j = 0; j < dim; ++j) {
        xh[j] = T((double(r[j]) - mu)) * inv;
        yr[j] = xh[j] * gp[j] + bp[j];
      }
    }
    return y;
  }

  Mat<T> backward(ParamStore<T>& ps, const Mat<T>& dy, const Cache& c) const {
    Mat<T> dx(dy.rows, dim);
    const T* gp = ps.ptr(gamma);
    T* dgamma = ps.grad(gamma);
    T* dbeta = ps.grad(beta);
    for (int i = 0; i < dy.rows; ++i) {
      const T* dyr = dy.row(i);
      const T* xh = c.xhat.row(i);
      T inv = c.inv_std[i];
      double sum_dxh = 0, sum_dxh_xh = 0;
      for (int j = 0; j < dim; ++j) {
        double dxh = double(dyr[j]) * double(gp[j]);
        sum_dxh += dxh;
        sum_dxh_xh += dxh * double(xh[j]);
        dgamma[j] += dyr[j] * xh[j];
        dbeta[j] += dyr[j];
      }
      T* dxr = dx.row(i);
      for (int j = 0; j < dim; ++j) {
        double dxh = double(dyr[j]) * double(gp[j]);
        dxr[j] = T(double(inv) * (dxh - sum_dxh / dim - double(xh[j]) * sum_dxh_xh / dim));
      }
    }
    return dx;
  }
};

// --- multi-head bidirectional attention ------------------------------------------

// Operates on a stack of B sequences of length L ([B*L x width]); queries may
// come from a different stack than keys/values (cross-attention).
template <typename T>
struct Attention {
  Linear<T> qkv;  // used for self-attention
  Linear<T> q_proj, kv_proj;  // used for cross-attention
  Linear<T> out;
  int width = 0, heads = 0, head_dim = 0;
  bool cross = false;

  struct Cache {
    Mat<T> q, k, v;             // [B*L x width] each
    std::vector<Mat<T>> probs;  // per (b, head): [Lq x Lk]
    Mat<T> concat;              // [B*Lq x width]
    int B = 0, Lq = 0, Lk = 0;
  };

  void init(ParamStore<T>& ps, const std::string& name, int width_, int heads_, bool cross_,
            Rng& rng) {
    width = width_;
    heads = heads_;
    head_dim = width / heads;
    cross = cross_;
    if (cross) {
      q_proj.init(ps, name + ".q", width, width, rng);
      kv_proj.init(ps, name + ".kv", width, 2 * width, rng);
    } else {
      qkv.init(ps, name + ".qkv", width, 3 * width, rng);
    }
    out.init(ps, name + ".out", width, width, rng);
  }

  // copy head h of row-block [r0, r0+L) into a contiguous [L x head_dim] matrix
  void gather_head(const Mat<T>& src, int r0, int L, int h, int col0, Mat<T>& dst) const {
    if (dst.rows != L || dst.cols != head_dim) dst = Mat<T>(L, head_dim);
    for (int i = 0; i < L; ++i) {
      const T* s = src.row(r0 + i) + col0 + h * head_dim;
      T* d = dst.row(i);
      for (int j = 0; j < head_dim; ++j) d[j] = s[j];
    }
  }

  void scatter_head_add(Mat<T>& dst, int r0, int L, int h, int col0, const Mat<T>& src) const {
    for (int i = 0; i < L; ++i) {
      T* d = dst.row(r0 + i) + col0 + h * head_dim;
      const T* s = src.row(i);
      for (int j = 0; j < head_dim; ++j) d[j] += s[j];
    }
  }

  Mat<T> forward(const ParamStore<T>& ps, const Mat<T>& xq, const Mat<T>& xkv, int B, int Lq,
                 int Lk, Cache& c) const {
    c.B = B;
    c.Lq = Lq;
    c.Lk = Lk;
    if (cross) {
      c.q = q_proj.forward(ps, xq);
      Mat<T> kv = kv_proj.forward(ps, xkv);
      c.k = Mat<T>(B * Lk, width);
      c.v = Mat<T>(B * Lk, width);
      for (int i = 0; i < kv.rows; ++i) {
        const T* r = kv.row(i);
        std::copy(r, r + width, c.k.row(i));
        std::copy(r + width, r + 2 * width, c.v.row(i));
      }
    } else {
      Mat<T> qkv_out = qkv.forward(ps, xq);
      c.q = Mat<T>(B * Lq, width);
      c.k = Mat<T>(B * Lk, width);
      c.v = Mat<T>(B * Lk, width);
      for (int i = 0; i < qkv_out.rows; ++i) {
        const T* r = qkv_out.row(i);
        std::copy(r, r + width, c.q.row(i));
        std::copy(r + width, r + 2 * width, c.k.row(i));
        std::copy(r + 2 * width, r + 3 * width, c.v.row(i));
      }
    }

    const T scale = T(1.0 / std::sqrt(double(head_dim)));
    c.probs.assign(size_t(B) * heads, Mat<T>());
    c.concat = Mat<T>(B * Lq, width);
    c.concat.zero();

#pragma omp parallel for schedule(static) if (kern::threads() > 1 && B * heads > 1)
    for (int bh = 0; bh < B * heads; ++bh) {
      int b = bh / heads, h = bh % heads;
      Mat<T> qh, kh, vh;
      gather_head(c.q, b * Lq, Lq, h, 0, qh);
      gather_head(c.k, b * Lk, Lk, h, 0, kh);
      gather_head(c.v, b * Lk, Lk, h, 0, vh);
      Mat<T>& p = c.probs[bh];
      matmul_nt(qh, kh, p);
      for (auto& s : p.a) s *= scale;
      softmax_rows(p);
      Mat<T> oh;
      matmul(p, vh, oh);
      // concat write is disjoint per (b,h)
      for (int i = 0; i < Lq; ++i) {
        T* d = c.concat.row(b * Lq + i) + h * head_dim;
        const T* s = oh.row(i);
        for (int j = 0; j < head_dim; ++j) d[j] = s[j];
      }
    }
    return out.forward(ps, c.concat);
  }

  // returns (dxq, dxkv); for self-attention dxkv is empty and dxq carries all of it
  std::pair<Mat<T>, Mat<T>> backward(ParamStore<T>& ps, const Mat<T>& xq, const Mat<T>& xkv,
                                     const Mat<T>& dy, const Cache& c) const {
    Mat<T> dconcat = out.backward(ps, c.concat, dy);
    Mat<T> dq(c.q.rows, width), dk(c.k.rows, width), dv(c.v.rows, width);
    dq.zero();
    dk.zero();
    dv.zero();

    const T scale = T(1.0 / std::sqrt(double(head_dim)));
    const int B = c.B, Lq = c.Lq, Lk = c.Lk;
#pragma omp parallel for schedule(static) if (kern::threads() > 1 && B * heads > 1)
    for (int bh = 0; bh < B * heads; ++bh) {
      int b = bh / heads, h = bh % heads;
      Mat<T> qh, kh, vh, doh;
      gather_head(c.q, b * Lq, Lq, h, 0, qh);
      gather_head(c.k, b * Lk, Lk, h, 0, kh);
      gather_head(c.v, b * Lk, Lk, h, 0, vh);
      gather_head(dconcat, b * Lq, Lq, h, 0, doh);
      const Mat<T>& p = c.probs[bh];

      Mat<T> dvh, dp, dsh, dqh, dkh;
      matmul_tn(p, doh, dvh);   // dV = P^T dO
      matmul_nt(doh, vh, dp);   // dP = dO V^T
      // softmax backward rows: dS = P * (dP - rowsum(dP o P))
      dsh = Mat<T>(Lq, Lk);
      for (int i = 0; i < Lq; ++i) {
        const T* pr = p.row(i);
        const T* dpr = dp.row(i);
        double dot = 0;
        for (int j = 0; j < Lk; ++j) dot += double(pr[j]) * double(dpr[j]);
        T* ds = dsh.row(i);
        for (int j = 0; j < Lk; ++j) ds[j] = pr[j] * T(double(dpr[j]) - dot) * scale;
      }
      matmul(dsh, kh, dqh);     // dQ = dS K
      matmul_tn(dsh, qh, dkh);  // dK = dS^T Q
      scatter_head_add(dq, b * Lq, Lq, h, 0, dqh);
      scatter_head_add(dk, b * Lk, Lk, h, 0, dkh);
      scatter_head_add(dv, b * Lk, Lk, h, 0, dvh);
    }

    if (cross) {
      Mat<T> dxq = q_proj.backward(ps, xq, dq);
      Mat<T> dkv(B * Lk, 2 * width);
      for (int i = 0; i < dkv.rows; ++i) {
        T* r = dkv.row(i);
        std::copy(dk.row(i), dk.row(i) + width, r);
        std::copy(dv.row(i), dv.row(i) + width, r + width);
      }
      Mat<T> dxkv = kv_proj.backward(ps, xkv, dkv);
      return {std::move(dxq), std::move(dxkv)};
    }
    Mat<T> dqkv(B * Lq, 3 * width);
    for (int i = 0; i < dqkv.rows; ++i) {
      T* r = dqkv.row(i);
      std::copy(dq.row(i), dq.row(i) + width, r);
      std::copy(dk.row(i), dk.row(i) + width, r + width);
      std::copy(dv.row(i), dv.row(i) + width, r + 2 * width);
    }
    Mat<T> dx = qkv.backward(ps, xq, dqkv);
    return {std::move(dx), Mat<T>()};
  }
};

// --- pre-LN transformer block ------------------------------------------------------

template <typename T>
struct Block {
  LayerNorm<T> ln1, ln2;
  Attention<T> attn;
  Linear<T> fc1, fc2;
  int width = 0;

  struct Cache {
    typename LayerNorm<T>::Cache ln1c, ln2c;
    typename Attention<T>::Cache attnc;
    Mat<T> x, ln1y, h, ln2y, fc1y, act;
  };

  void init(ParamStore<T>& ps, const std::string& name, int width_, int heads, Rng& rng) {
    width = width_;
    ln1.init(ps, name + ".ln1", width);
    attn.init(ps, name + ".attn", width, heads, false, rng);
    ln2.init(ps, name + ".ln2", width);
    fc1.init(ps, name + ".fc1", width, 4 * width, rng);
    fc2.init(ps, name + ".fc2", 4 * width, width, rng);
  }

  Mat<T> forward(const ParamStore<T>& ps, const Mat<T>& x, int B, int L, Cache& c) const {
    c.x = x;
    c.ln1y = ln1.forward(ps, x, c.ln1c);
    Mat<T> a = attn.forward(ps, c.ln1y, c.ln1y, B, L, L, c.attnc);
    c.h = x;
    for (size_t i = 0; i < c.h.size(); ++i) c.h.a[i] += a.a[i];
    c.ln2y = ln2.forward(ps, c.h, c.ln2c);
    c.fc1y = fc1.forward(ps, c.ln2y);
    gelu_forward(c.fc1y, c.act);
    Mat<T> m = fc2.forward(ps, c.act);
    for (size_t i = 0; i < m.size(); ++i) m.a[i] += c.h.a[i];
    return m;
  }

  Mat<T> backward(ParamStore<T>& ps, const Mat<T>& dy, const Cache& c) const {
    Mat<T> dact = fc2.backward(ps, c.act, dy);
    Mat<T> dfc1;
    gelu_backward(c.fc1y, dact, dfc1);
    Mat<T> dln2y = fc1.backward(ps, c.ln2y, dfc1);
    Mat<T> dh = ln2.backward(ps, dln2y, c.ln2c);
    for (size_t i = 0; i < dh.size(); ++i) dh.a[i] += dy.a[i];  // residual
    auto [dln1y, unused] = attn.backward(ps, c.ln1y, c.ln1y, dh, c.attnc);
    Mat<T> dx = ln1.backward(ps, dln1y, c.ln1c);
    for (size_t i = 0; i < dx.size(); ++i) dx.a[i] += dh.a[i];  // residual
    return dx;
  }
};

// --- pre-LN cross-attention block -----------------------------------------------

template <typename T>
struct CrossBlock {
  LayerNorm<T> lnq, lnkv, ln2;
  Attention<T> attn;
  Linear<T> fc1, fc2;
  int width = 0;

  struct Cache {
    typename LayerNorm<T>::Cache lnqc, lnkvc, ln2c;
    typename Attention<T>::Cache attnc;
    Mat<T> lnqy, lnkvy, h, ln2y, fc1y, act;
  };

  void init(ParamStore<T>& ps, const std::string& name, int width_, int heads, Rng& rng) {
    width = width_;
    lnq.init(ps, name + ".lnq", width);
    lnkv.init(ps, name + ".lnkv", width);
    attn.init(ps, name + ".attn", width, heads, true, rng);
    ln2.init(ps, name + ".ln2", width);
    fc1.init(ps, name + ".fc1", width, 4 * width, rng);
    fc2.init(ps, name + ".fc2", 4 * width, width, rng);
  }

  Mat<T> forward(const ParamStore<T>& ps, const Mat<T>& xq, const Mat<T>& xkv, int B, int Lq,
                 int Lk, Cache& c) const {
    c.lnqy = lnq.forward(ps, xq, c.lnqc);
    c.lnkvy = lnkv.forward(ps, xkv, c.lnkvc);
    Mat<T> a = attn.forward(ps, c.lnqy, c.lnkvy, B, Lq, Lk, c.attnc);
    c.h = xq;
    for (size_t i = 0; i < c.h.size(); ++i) c.h.a[i] += a.a[i];
    c.ln2y = ln2.forward(ps, c.h, c.ln2c);
    c.fc1y = fc1.forward(ps, c.ln2y);
    gelu_forward(c.fc1y, c.act);
    Mat<T> m = fc2.forward(ps, c.act);
    for (size_t i = 0; i < m.size(); ++i) m.a[i] += c.h.a[i];
    return m;
  }

  std::pair<Mat<T>, Mat<T>> backward(ParamStore<T>& ps, const Mat<T>& dy, const Cache& c) const {
    Mat<T> dact = fc2.backward(ps, c.act, dy);
    Mat<T> dfc1;
    gelu_backward(c.fc1y, dact, dfc1);
    Mat<T> dln2y = fc1.backward(ps, c.ln2y, dfc1);
    Mat<T> dh = ln2.backward(ps, dln2y, c.ln2c);
    for (size_t i = 0; i < dh.size(); ++i) dh.a[i] += dy.a[i];
    auto [dlnqy, dlnkvy] = attn.backward(ps, c.lnqy, c.lnkvy, dh, c.attnc);
    Mat<T> dxq = lnq.backward(ps, dlnqy, c.lnqc);
    for (size_t i = 0; i < dxq.size(); ++i) dxq.a[i] += dh.a[i];
    Mat<T> dxkv = lnkv.backward(ps, dlnkvy, c.lnkvc);
    return {std::move(dxq), std::move(dxkv)};
  }
};

// --- encoder: stack of blocks with a final layer norm ----------------------------------

template <typename T>
struct Encoder {
  std::vector<Block<T>> blocks;
  LayerNorm<T> ln_f;
  int width = 0;

  struct Cache {
    std::vector<typename Block<T>::Cache> blockc;
    typename LayerNorm<T>::Cache lnfc;
    Mat<T> pre_lnf;
  };

  void init(ParamStore<T>& ps, const std::string& name, int width_, int depth, int heads,
            Rng& rng) {
    width = width_;
    blocks.resize(depth);
    for (int i = 0; i < depth; ++i)
      blocks[i].init(ps, name + ".block" + std::to_string(i), width, heads, rng);
    ln_f.init(ps, name + ".lnf", width);
  }

  Mat<T> forward(const ParamStore<T>& ps, const Mat<T>& x, int B, int L, Cache& c) const {
    c.blockc.resize(blocks.size());
    Mat<T> h = x;
    for (size_t i = 0; i < blocks.size(); ++i) h = blocks[i].forward(ps, h, B, L, c.blockc[i]);
    c.pre_lnf = h;
    return ln_f.forward(ps, h, c.lnfc);
  }

  Mat<T> backward(ParamStore<T>& ps, const Mat<T>& dy, const Cache& c) const {
    Mat<T> d = ln_f.backward(ps, dy, c.lnfc);
    for (size_t i = blocks.size(); i-- > 0;) d = blocks[i].backward(ps, d, c.blockc[i]);
    return d;
  }
};

// --- MLP (stack of linear+GELU, linear output) ---------------------------------------

template <typename T>
struct Mlp {
  std::vector<Linear<T>> layers;
  int in = 0, out = 0;

  struct Cache {
    std::vector<Mat<T>> pre;   // pre-activation per hidden layer
    std::vector<Mat<T>> post;  // post-activation inputs to the next layer
  };

  void init(ParamStore<T>& ps, const std::string& name, int in_, int hidden, int n_hidden,
            int out_, Rng& rng) {
    in = in_;
    out = out_;
    layers.resize(n_hidden + 1);
    int prev = in;
    for (int i = 0; i < n_hidden; ++i) {
      layers[i].init(ps, name + ".fc" + std::to_string(i), prev, hidden, rng);
      prev = hidden;
    }
    layers[n_hidden].init(ps, name + ".out", prev, out_, rng);
  }

  Mat<T> forward(const ParamStore<T>& ps, const Mat<T>& x, Cache& c) const {
    const int nh = int(layers.size()) - 1;
    c.pre.resize(nh);
    c.post.resize(nh + 1);
    c.post[0] = x;
    for (int i = 0; i < nh; ++i) {
      c.pre[i] = layers[i].forward(ps, c.post[i]);
      gelu_forward(c.pre[i], c.post[i + 1]);
    }
    return layers[nh].forward(ps, c.post[nh]);
  }

  Mat<T> backward(ParamStore<T>& ps, const Mat<T>& dy, const Cache& c) const {
    const int nh = int(layers.size()) - 1;
    Mat<T> d = layers[nh].backward(ps, c.post[nh], dy);
    for (int i = nh - 1; i >= 0; --i) {
      Mat<T> dpre;
      gelu_backward(c.pre[i], d, dpre);
      d = layers[i].backward(ps, c.post[i], dpre);
    }
    return d;
  }
};

}  // namespace cmt::nn

namespace cmt {
template <typename T>
using StoreList = std::vector<std::pair<std::string, nn::ParamStore<T>*>>;
}
