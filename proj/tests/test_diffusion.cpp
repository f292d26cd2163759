#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cmt/diffusion.hpp"
#include "gradcheck.hpp"

using namespace cmt;

TEST_CASE("cosine schedule endpoints and monotonicity") {
  auto s = DiffusionSchedule::cosine(100);
  CHECK(s.alpha_bar[0] >= 1.0 - 1e-6);
  CHECK(s.alpha_bar[100] <= 1e-3);
  for (int t = 0; t < 100; ++t) CHECK(s.alpha_bar[t] > s.alpha_bar[t + 1]);
  CHECK_THROWS(s.cosine_alpha_bar(-1));
  CHECK_THROWS(s.cosine_alpha_bar(101));
  CHECK(s.cosine_alpha_bar(0) == doctest::Approx(1.0));
}

TEST_CASE("add_noise matches the closed form exactly") {
  Rng rng(1);
  const int dim = 6;
  std::vector<double> x0(dim), eps(dim), out(dim);
  for (auto& v : x0) v = rng.normal();
  for (auto& v : eps) v = rng.normal();

  SUBCASE("alpha_bar = 1 gives x0") {
    add_noise<double>(x0, eps, 1.0, out);
    for (int i = 0; i < dim; ++i) CHECK(out[i] == x0[i]);
  }
  SUBCASE("alpha_bar = 0 gives eps") {
    add_noise<double>(x0, eps, 0.0, out);
    for (int i = 0; i < dim; ++i) CHECK(out[i] == eps[i]);
  }
  SUBCASE("exact linear combination") {
    double ab = 0.37;
    add_noise<double>(x0, eps, ab, out);
    for (int i = 0; i < dim; ++i)
      CHECK(out[i] == std::sqrt(ab) * x0[i] + std::sqrt(1.0 - ab) * eps[i]);
  }
}

TEST_CASE("noised vector second moment matches theory (monte carlo)") {
  Rng rng(2);
  const int dim = 8;
  std::vector<double> x0(dim);
  for (auto& v : x0) v = rng.normal();
  double x0_sq = 0;
  for (double v : x0) x0_sq += v * v;

  const double ab = 0.6;
  const int draws = 10000;
  double acc = 0, acc2 = 0;
  std::vector<double> eps(dim), out(dim);
  for (int k = 0; k < draws; ++k) {
    for (auto& v : eps) v = rng.normal();
    add_noise<double>(x0, eps, ab, out);
    double n2 = 0;
    for (double v : out) n2 += v * v;
    acc += n2;
    acc2 += n2 * n2;
  }
  double mean = acc / draws;
  double expect = ab * x0_sq + (1 - ab) * dim;
  double var = acc2 / draws - mean * mean;
  double sigma = std::sqrt(var / draws);
  CHECK(std::abs(mean - expect) < 3 * sigma + 1e-9);
}

TEST_CASE("denoise loss: zero head on a unit token gives 1/dim") {
  Rng rng(3);
  nn::ParamStore<double> ps;
  DiffusionHead<double> head;
  const int dim = 5, width = 8;
  head.init(ps, "head", dim, width, 16, 2, 10, true, rng);
  // zero the output layer so the head predicts exactly 0
  auto& out_layer = head.mlp.layers.back();
  std::fill(ps.ptr(out_layer.W), ps.ptr(out_layer.W) + out_layer.W.size(), 0.0);
  std::fill(ps.ptr(out_layer.b), ps.ptr(out_layer.b) + out_layer.b.size(), 0.0);

  Mat<double> x0(1, dim), c(1, width), eps(1, dim);
  x0.zero();
  x0.at(0, 2) = 1.0;  // unit vector
  c.zero();
  eps.zero();
  std::vector<int> t = {5};
  auto sched = DiffusionSchedule::cosine(10);
  auto res = head.loss_and_grad(ps, x0, c, t, eps, sched);
  CHECK(res.loss == doctest::Approx(1.0 / dim));
}

TEST_CASE("denoise loss is the mse against the clean token (x0 mode)") {
  Rng rng(4);
  nn::ParamStore<double> ps;
  DiffusionHead<double> head;
  const int dim = 4, width = 6;
  head.init(ps, "head", dim, width, 12, 2, 20, true, rng);
  auto sched = DiffusionSchedule::cosine(20);

  const int M = 3;
  Mat<double> x0(M, dim), c(M, width), eps(M, dim);
  for (auto& v : x0.a) v = rng.normal();
  for (auto& v : c.a) v = rng.normal();
  for (auto& v : eps.a) v = rng.normal();
  std::vector<int> t = {3, 10, 17};

  auto res = head.loss_and_grad(ps, x0, c, t, eps, sched);

  // oracle: recompute pred by hand through the mlp
  Mat<double> x_t(M, dim);
  for (int i = 0; i < M; ++i)
    add_noise<double>(std::span<const double>(x0.row(i), dim),
                      std::span<const double>(eps.row(i), dim), sched.alpha_bar[t[i]],
                      std::span<double>(x_t.row(i), dim));
  Mat<double> in = head.assemble_input(ps, x_t, c, t);
  nn::Mlp<double>::Cache mc;
  Mat<double> pred = head.mlp.forward(ps, in, mc);
  double want = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    double d = pred.a[i] - x0.a[i];
    want += d * d;
  }
  want /= double(M) * dim;
  CHECK(res.loss == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("denoise loss targets the noise in eps mode") {
  Rng rng(5);
  nn::ParamStore<double> ps;
  DiffusionHead<double> head;
  const int dim = 4, width = 6;
  head.init(ps, "head", dim, width, 12, 2, 20, false, rng);
  auto sched = DiffusionSchedule::cosine(20);
  Mat<double> x0(1, dim), c(1, width), eps(1, dim);
  for (auto& v : x0.a) v = rng.normal();
  for (auto& v : c.a) v = rng.normal();
  for (auto& v : eps.a) v = rng.normal();
  std::vector<int> t = {12};
  auto res = head.loss_and_grad(ps, x0, c, t, eps, sched);

  Mat<double> x_t(1, dim);
  add_noise<double>(std::span<const double>(x0.row(0), dim),
                    std::span<const double>(eps.row(0), dim), sched.alpha_bar[12],
                    std::span<double>(x_t.row(0), dim));
  Mat<double> in = head.assemble_input(ps, x_t, c, t);
  nn::Mlp<double>::Cache mc;
  Mat<double> pred = head.mlp.forward(ps, in, mc);
  double want = 0;
  for (int j = 0; j < dim; ++j) {
    double d = pred.at(0, j) - eps.at(0, j);
    want += d * d;
  }
  want /= dim;
  CHECK(res.loss == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("denoise loss gradients match finite differences") {
  Rng rng(6);
  nn::ParamStore<double> ps;
  DiffusionHead<double> head;
  const int dim = 4, width = 6;
  head.init(ps, "head", dim, width, 10, 2, 15, true, rng);
  auto sched = DiffusionSchedule::cosine(15);
  const int M = 4;
  Mat<double> x0(M, dim), c(M, width), eps(M, dim);
  for (auto& v : x0.a) v = rng.normal();
  for (auto& v : c.a) v = rng.normal();
  for (auto& v : eps.a) v = rng.normal();
  std::vector<int> t = {1, 5, 9, 14};

  auto loss = [&] {
    nn::ParamStore<double> tmp = ps;  // loss_and_grad mutates grads only
    DiffusionHead<double> h2 = head;
    return h2.loss_and_grad(tmp, x0, c, t, eps, sched).loss;
  };
  ps.zero_grad();
  auto res = head.loss_and_grad(ps, x0, c, t, eps, sched);
  // condition gradient dc via finite differences
  const double h = 1e-6;
  for (int probe = 0; probe < 10; ++probe) {
    int i = rng.uniform_int(M), j = rng.uniform_int(width);
    double saved = c.at(i, j);
    c.at(i, j) = saved + h;
    double lp = loss();
    c.at(i, j) = saved - h;
    double lm = loss();
    c.at(i, j) = saved;
    CHECK(res.dc.at(i, j) == doctest::Approx((lp - lm) / (2 * h)).epsilon(1e-4));
  }
  auto gc = testing::gradcheck(ps, loss, 40, rng);
  CHECK(gc.max_rel_err < 1e-4);
}

TEST_CASE("sampling is deterministic given the seed") {
  Rng rng(7);
  nn::ParamStore<double> ps;
  DiffusionHead<double> head;
  head.init(ps, "head", 5, 6, 12, 2, 30, true, rng);
  auto sched = DiffusionSchedule::cosine(30);
  std::vector<double> c(6, 0.3);
  Rng r1(99), r2(99);
  auto s1 = head.sample(ps, c, sched, r1);
  auto s2 = head.sample(ps, c, sched, r2);
  CHECK(s1 == s2);
}

namespace {

// trains a head on a fixed conditional distribution and samples from it
template <typename F>
void train_head(DiffusionHead<double>& head, nn::ParamStore<double>& ps,
                const DiffusionSchedule& sched, F draw_x0, const Mat<double>& c_row, int steps,
                Rng& rng) {
  const int dim = head.token_dim;
  const int B = 64;
  for (int it = 0; it < steps; ++it) {
    Mat<double> x0(B, dim), c(B, head.width), eps(B, dim);
    std::vector<int> t(B);
    for (int i = 0; i < B; ++i) {
      std::vector<double> x = draw_x0(rng);
      std::copy(x.begin(), x.end(), x0.row(i));
      std::copy(c_row.row(0), c_row.row(0) + head.width, c.row(i));
      for (int j = 0; j < dim; ++j) eps.at(i, j) = rng.normal();
      t[i] = 1 + rng.uniform_int(sched.steps);
    }
    ps.zero_grad();
    head.loss_and_grad(ps, x0, c, t, eps, sched);
    ps.adam_step(2e-3);
  }
}

}  // namespace

TEST_CASE("a head trained on a single token reproduces it") {
  Rng rng(8);
  nn::ParamStore<double> ps;
  DiffusionHead<double> head;
  const int dim = 6, width = 8;
  head.init(ps, "head", dim, width, 64, 3, 50, true, rng);
  auto sched = DiffusionSchedule::cosine(50);

  std::vector<double> target = {0.4, -0.2, 0.7, -0.6, 0.1, 0.3};
  Mat<double> c(1, width);
  c.zero();
  train_head(head, ps, sched, [&](Rng&) { return target; }, c, 1500, rng);

  int ok = 0;
  const int draws = 300;
  for (int k = 0; k < draws; ++k) {
    auto s = head.sample(ps, std::span<const double>(c.row(0), width), sched, rng);
    double linf = 0;
    for (int j = 0; j < dim; ++j) linf = std::max(linf, std::abs(s[j] - target[j]));
    if (linf < 0.05) ++ok;
  }
  CHECK(double(ok) / draws >= 0.99);
}

TEST_CASE("a head trained on two clusters recovers both modes") {
  Rng rng(9);
  nn::ParamStore<double> ps;
  DiffusionHead<double> head;
  const int dim = 4, width = 8;
  head.init(ps, "head", dim, width, 64, 3, 50, true, rng);
  auto sched = DiffusionSchedule::cosine(50);

  const double sigma = 0.05;
  auto draw = [&](Rng& r) {
    double center = r.uniform() < 0.5 ? 0.5 : -0.5;
    std::vector<double> x(dim);
    for (int j = 0; j < dim; ++j) x[j] = center + sigma * r.normal();
    return x;
  };
  Mat<double> c(1, width);
  c.zero();
  train_head(head, ps, sched, draw, c, 2500, rng);

  int ok = 0, plus = 0, minus = 0;
  const int draws = 400;
  for (int k = 0; k < draws; ++k) {
    auto s = head.sample(ps, std::span<const double>(c.row(0), width), sched, rng);
    double d_plus = 0, d_minus = 0;
    for (int j = 0; j < dim; ++j) {
      d_plus = std::max(d_plus, std::abs(s[j] - 0.5));
      d_minus = std::max(d_minus, std::abs(s[j] + 0.5));
    }
    if (d_plus < 3 * sigma) {
      ++ok;
      ++plus;
    } else if (d_minus < 3 * sigma) {
      ++ok;
      ++minus;
    }
  }
  CHECK(double(ok) / draws >= 0.95);
  CHECK(plus > draws / 10);   // both modes appear
  CHECK(minus > draws / 10);
}
