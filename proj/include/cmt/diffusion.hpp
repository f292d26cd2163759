// Cosine noise schedule and the per-token diffusion MLP head: trains against
// either the clean token (x0, default) or the noise (eps) behind a config
// switch, and samples ancestrally through the implied posterior.
#pragma once

#include <span>

#include "cmt/nn.hpp"

namespace cmt {

struct DiffusionSchedule {
  int steps = 0;
  std::vector<double> alpha_bar;  // size steps+1, alpha_bar[0] == 1

  // f(t)/f(0) cosine with s = 0.008, clipped below at 1e-5. Normalizing by
  // f(0) keeps alpha_bar[0] = 1 exactly so t=0 adds no noise.
  static DiffusionSchedule cosine(int steps) {
    DiffusionSchedule d;
    d.steps = steps;
    d.alpha_bar.resize(steps + 1);
    const double s = 0.008;
    auto f = [&](double t) {
      double a = (t / steps + s) / (1.0 + s) * (std::numbers::pi / 2.0);
      double c = std::cos(a);
      return c * c;
    };
    const double f0 = f(0.0);
    for (int t = 0; t <= steps; ++t)
      d.alpha_bar[t] = std::clamp(f(double(t)) / f0, 1e-5, 1.0);
    return d;
  }

  double cosine_alpha_bar(int t) const {
    if (t < 0 || t > steps) throw std::out_of_range("alpha_bar: t out of range");
    return alpha_bar[t];
  }
};

// x_t = sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps, exactly
template <typename T>
void add_noise(std::span<const T> x0, std::span<const T> eps, double alpha_bar,
               std::span<T> out) {
  const T a = T(std::sqrt(alpha_bar));
  const T b = T(std::sqrt(1.0 - alpha_bar));
  for (size_t i = 0; i < x0.size(); ++i) out[i] = a * x0[i] + b * eps[i];
}

// guard for decoded x0 during sampling; token coordinates live in [-1,1] and
// latents are O(1), so this only clips divergent trajectories
constexpr double kX0Clamp = 4.0;

template <typename T>
struct DiffusionHead {
  nn::Mlp<T> mlp;           // (token_dim + width) -> hidden x n -> token_dim
  nn::ParamRef time_embed;  // (steps+1) x width, added to the slot condition
  int token_dim = 0, width = 0;
  bool predict_x0 = true;

  void init(nn::ParamStore<T>& ps, const std::string& name, int token_dim_, int width_,
            int hidden, int n_hidden, int steps, bool predict_x0_, Rng& rng) {
    token_dim = token_dim_;
    width = width_;
    predict_x0 = predict_x0_;
    mlp.init(ps, name + ".mlp", token_dim + width, hidden, n_hidden, token_dim, rng);
    time_embed = ps.add(name + ".time", steps + 1, width);
    ps.init_normal(time_embed, rng, 0.02);
  }

  Mat<T> assemble_input(const nn::ParamStore<T>& ps, const Mat<T>& x_t, const Mat<T>& c,
                        std::span<const int> t) const {
    Mat<T> in(x_t.rows, token_dim + width);
    const T* te = ps.ptr(time_embed);
    for (int i = 0; i < x_t.rows; ++i) {
      T* r = in.row(i);
      std::copy(x_t.row(i), x_t.row(i) + token_dim, r);
      const T* tv = te + size_t(t[i]) * width;
      const T* cv = c.row(i);
      for (int j = 0; j < width; ++j) r[token_dim + j] = cv[j] + tv[j];
    }
    return in;
  }

  // Mean-per-element squared error over all masked slots (the reduction
  // convention recorded in the config docs). Returns d(loss)/d(c) so the
  // transformer receives gradient through the slot conditions.
  struct LossResult {
    double loss = 0;
    Mat<T> dc;
  };

  LossResult loss_and_grad(nn::ParamStore<T>& ps, const Mat<T>& x0, const Mat<T>& c,
                           std::span<const int> t, const Mat<T>& eps,
                           const DiffusionSchedule& sched) {
    const int M = x0.rows;
    Mat<T> x_t(M, token_dim);
    for (int i = 0; i < M; ++i)
      add_noise<T>(std::span<const T>(x0.row(i), token_dim), std::span<const T>(eps.row(i), token_dim),
                   sched.alpha_bar[t[i]], std::span<T>(x_t.row(i), token_dim));

    Mat<T> in = assemble_input(ps, x_t, c, t);
    typename nn::Mlp<T>::Cache cache;
    Mat<T> pred = mlp.forward(ps, in, cache);
    check_finite(pred, "diffusion head output");

    const Mat<T>& target = predict_x0 ? x0 : eps;
    LossResult res;
    const double n_el = double(M) * token_dim;
    Mat<T> dpred(M, token_dim);
    for (size_t i = 0; i < pred.size(); ++i) {
      double d = double(pred.a[i]) - double(target.a[i]);
      res.loss += d * d;
      dpred.a[i] = T(2.0 * d / n_el);
    }
    res.loss /= n_el;

    Mat<T> din = mlp.backward(ps, dpred, cache);
    // split: x_t part is data, c part feeds the transformer, time embeds accumulate
    res.dc = Mat<T>(M, width);
    T* te_g = ps.grad(time_embed);
    for (int i = 0; i < M; ++i) {
      const T* r = din.row(i) + token_dim;
      std::copy(r, r + width, res.dc.row(i));
      T* tg = te_g + size_t(t[i]) * width;
      for (int j = 0; j < width; ++j) tg[j] += r[j];
    }
    return res;
  }

  // Ancestral sampling from t=steps down to 1; deterministic given rng.
  std::vector<T> sample(const nn::ParamStore<T>& ps, std::span<const T> cond,
                        const DiffusionSchedule& sched, Rng& rng) const {
    Mat<T> c(1, width);
    std::copy(cond.begin(), cond.end(), c.a.begin());
    Mat<T> x(1, token_dim);
    for (auto& v : x.a) v = T(rng.normal());

    for (int t = sched.steps; t >= 1; --t) {
      std::vector<int> ts = {t};
      Mat<T> in = assemble_input(ps, x, c, ts);
      typename nn::Mlp<T>::Cache cache;
      Mat<T> pred = mlp.forward(ps, in, cache);

      const double ab_t = sched.alpha_bar[t];
      const double ab_prev = sched.alpha_bar[t - 1];
      std::vector<double> x0_hat(token_dim);
      for (int j = 0; j < token_dim; ++j) {
        double p = double(pred.at(0, j));
        double x0j = predict_x0 ? p : (double(x.at(0, j)) - std::sqrt(1.0 - ab_t) * p) / std::sqrt(ab_t);
        x0_hat[j] = std::clamp(x0j, -kX0Clamp, kX0Clamp);
      }
      if (t == 1) {
        std::vector<T> out(token_dim);
        for (int j = 0; j < token_dim; ++j) out[j] = T(x0_hat[j]);
        return out;
      }
      const double alpha_t = ab_t / ab_prev;
      const double beta_t = 1.0 - alpha_t;
      const double c0 = std::sqrt(ab_prev) * beta_t / (1.0 - ab_t);
      const double c1 = std::sqrt(alpha_t) * (1.0 - ab_prev) / (1.0 - ab_t);
      const double var = beta_t * (1.0 - ab_prev) / (1.0 - ab_t);
      const double sd = std::sqrt(std::max(var, 0.0));
      for (int j = 0; j < token_dim; ++j) {
        double mean = c0 * x0_hat[j] + c1 * double(x.at(0, j));
        x.at(0, j) = T(mean + sd * rng.normal());
      }
    }
    return x.a;  // steps == 0 edge case
  }
};

}  // namespace cmt
