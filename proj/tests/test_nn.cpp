#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cmt/nn.hpp"
#include "gradcheck.hpp"

using namespace cmt;
using nn::ParamStore;

namespace {

Mat<double> random_mat(int r, int c, Rng& rng, double scale = 1.0) {
  Mat<double> m(r, c);
  for (auto& v : m.a) v = rng.normal() * scale;
  return m;
}

// loss = sum(C o Y): generic linear functional of the output
double weighted_sum(const Mat<double>& y, const Mat<double>& c) {
  double s = 0;
  for (size_t i = 0; i < y.size(); ++i) s += y.a[i] * c.a[i];
  return s;
}

}  // namespace

TEST_CASE("linear layer gradients match finite differences") {
  Rng rng(1);
  ParamStore<double> ps;
  nn::Linear<double> lin;
  lin.init(ps, "lin", 7, 5, rng);
  Mat<double> x = random_mat(4, 7, rng);
  Mat<double> C = random_mat(4, 5, rng);

  auto loss = [&] { return weighted_sum(lin.forward(ps, x), C); };
  ps.zero_grad();
  lin.backward(ps, x, C);
  auto res = testing::gradcheck(ps, loss, 40, rng);
  CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("linear backward returns correct input gradient") {
  Rng rng(2);
  ParamStore<double> ps;
  nn::Linear<double> lin;
  lin.init(ps, "lin", 6, 3, rng);
  Mat<double> x = random_mat(2, 6, rng);
  Mat<double> C = random_mat(2, 3, rng);
  ps.zero_grad();
  Mat<double> dx = lin.backward(ps, x, C);

  const double h = 1e-6;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 6; ++j) {
      double saved = x.at(i, j);
      x.at(i, j) = saved + h;
      double lp = weighted_sum(lin.forward(ps, x), C);
      x.at(i, j) = saved - h;
      double lm = weighted_sum(lin.forward(ps, x), C);
      x.at(i, j) = saved;
      CHECK(dx.at(i, j) == doctest::Approx((lp - lm) / (2 * h)).epsilon(1e-5));
    }
}

TEST_CASE("layer norm gradients match finite differences") {
  Rng rng(3);
  ParamStore<double> ps;
  nn::LayerNorm<double> ln;
  ln.init(ps, "ln", 9);
  Mat<double> x = random_mat(5, 9, rng, 2.0);
  Mat<double> C = random_mat(5, 9, rng);

  nn::LayerNorm<double>::Cache cache;
  auto loss = [&] {
    nn::LayerNorm<double>::Cache c2;
    return weighted_sum(ln.forward(ps, x, c2), C);
  };
  ps.zero_grad();
  ln.forward(ps, x, cache);
  Mat<double> dx = ln.backward(ps, C, cache);
  auto res = testing::gradcheck(ps, loss, 30, rng);
  CHECK(res.max_rel_err < 1e-6);

  // input gradient too
  const double h = 1e-6;
  for (int probe = 0; probe < 12; ++probe) {
    int i = rng.uniform_int(5), j = rng.uniform_int(9);
    double saved = x.at(i, j);
    x.at(i, j) = saved + h;
    double lp = loss();
    x.at(i, j) = saved - h;
    double lm = loss();
    x.at(i, j) = saved;
    CHECK(dx.at(i, j) == doctest::Approx((lp - lm) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("gelu matches its derivative") {
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    double x = rng.normal() * 2;
    double h = 1e-6;
    double fd = (nn::gelu(x + h) - nn::gelu(x - h)) / (2 * h);
    CHECK(nn::gelu_grad(x) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("self-attention gradients match finite differences") {
  Rng rng(5);
  ParamStore<double> ps;
  nn::Attention<double> attn;
  attn.init(ps, "attn", 16, 4, false, rng);
  const int B = 2, L = 5;
  Mat<double> x = random_mat(B * L, 16, rng);
  Mat<double> C = random_mat(B * L, 16, rng);

  auto loss = [&] {
    nn::Attention<double>::Cache c;
    return weighted_sum(attn.forward(ps, x, x, B, L, L, c), C);
  };
  nn::Attention<double>::Cache cache;
  ps.zero_grad();
  attn.forward(ps, x, x, B, L, L, cache);
  auto [dx, dkv] = attn.backward(ps, x, x, C, cache);
  auto res = testing::gradcheck(ps, loss, 60, rng);
  CHECK(res.max_rel_err < 1e-6);

  const double h = 1e-6;
  for (int probe = 0; probe < 15; ++probe) {
    int i = rng.uniform_int(B * L), j = rng.uniform_int(16);
    double saved = x.at(i, j);
    x.at(i, j) = saved + h;
    double lp = loss();
    x.at(i, j) = saved - h;
    double lm = loss();
    x.at(i, j) = saved;
    CHECK(dx.at(i, j) == doctest::Approx((lp - lm) / (2 * h)).epsilon(1e-4));
  }
}

TEST_CASE("cross-attention gradients match finite differences") {
  Rng rng(6);
  ParamStore<double> ps;
  nn::Attention<double> attn;
  attn.init(ps, "xattn", 12, 3, true, rng);
  const int B = 2, Lq = 3, Lk = 6;
  Mat<double> xq = random_mat(B * Lq, 12, rng);
  Mat<double> xkv = random_mat(B * Lk, 12, rng);
  Mat<double> C = random_mat(B * Lq, 12, rng);

  auto loss = [&] {
    nn::Attention<double>::Cache c;
    return weighted_sum(attn.forward(ps, xq, xkv, B, Lq, Lk, c), C);
  };
  nn::Attention<double>::Cache cache;
  ps.zero_grad();
  attn.forward(ps, xq, xkv, B, Lq, Lk, cache);
  auto [dxq, dxkv] = attn.backward(ps, xq, xkv, C, cache);
  auto res = testing::gradcheck(ps, loss, 60, rng);
  CHECK(res.max_rel_err < 1e-6);

  const double h = 1e-6;
  for (int probe = 0; probe < 10; ++probe) {
    int i = rng.uniform_int(B * Lk), j = rng.uniform_int(12);
    double saved = xkv.at(i, j);
    xkv.at(i, j) = saved + h;
    double lp = loss();
    xkv.at(i, j) = saved - h;
    double lm = loss();
    xkv.at(i, j) = saved;
    CHECK(dxkv.at(i, j) == doctest::Approx((lp - lm) / (2 * h)).epsilon(1e-4));
  }
}

TEST_CASE("attention outputs are batch-local") {
  // changing sequence 1 must not affect sequence 0 outputs
  Rng rng(7);
  ParamStore<double> ps;
  nn::Attention<double> attn;
  attn.init(ps, "attn", 8, 2, false, rng);
  const int B = 2, L = 4;
  Mat<double> x = random_mat(B * L, 8, rng);
  nn::Attention<double>::Cache c1, c2;
  Mat<double> y1 = attn.forward(ps, x, x, B, L, L, c1);
  for (int i = L; i < 2 * L; ++i)
    for (int j = 0; j < 8; ++j) x.at(i, j) += 1.3;
  Mat<double> y2 = attn.forward(ps, x, x, B, L, L, c2);
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < 8; ++j) CHECK(y1.at(i, j) == y2.at(i, j));
  bool changed = false;
  for (int i = L; i < 2 * L; ++i)
    for (int j = 0; j < 8; ++j) changed |= (y1.at(i, j) != y2.at(i, j));
  CHECK(changed);
}

TEST_CASE("transformer block and encoder gradients match finite differences") {
  Rng rng(8);
  ParamStore<double> ps;
  nn::Encoder<double> enc;
  enc.init(ps, "enc", 12, 2, 3, rng);
  const int B = 2, L = 4;
  Mat<double> x = random_mat(B * L, 12, rng);
  Mat<double> C = random_mat(B * L, 12, rng);

  auto loss = [&] {
    nn::Encoder<double>::Cache c;
    return weighted_sum(enc.forward(ps, x, B, L, c), C);
  };
  nn::Encoder<double>::Cache cache;
  ps.zero_grad();
  enc.forward(ps, x, B, L, cache);
  enc.backward(ps, C, cache);
  auto res = testing::gradcheck(ps, loss, 80, rng);
  CHECK(res.max_rel_err < 1e-5);
}

TEST_CASE("mlp gradients match finite differences") {
  Rng rng(9);
  ParamStore<double> ps;
  nn::Mlp<double> mlp;
  mlp.init(ps, "mlp", 10, 14, 3, 6, rng);
  Mat<double> x = random_mat(5, 10, rng);
  Mat<double> C = random_mat(5, 6, rng);

  auto loss = [&] {
    nn::Mlp<double>::Cache c;
    return weighted_sum(mlp.forward(ps, x, c), C);
  };
  nn::Mlp<double>::Cache cache;
  ps.zero_grad();
  mlp.forward(ps, x, cache);
  mlp.backward(ps, C, cache);
  auto res = testing::gradcheck(ps, loss, 60, rng);
  CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("adam reduces a quadratic") {
  Rng rng(10);
  ParamStore<double> ps;
  auto r = ps.add("x", 1, 8);
  ps.init_normal(r, rng, 2.0);
  for (int it = 0; it < 2000; ++it) {
    ps.zero_grad();
    double* x = ps.ptr(r);
    double* g = ps.grad(r);
    for (int i = 0; i < 8; ++i) g[i] = 2.0 * (x[i] - 3.0);
    ps.adam_step(0.05);
  }
  for (int i = 0; i < 8; ++i) CHECK(ps.ptr(r)[i] == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("parameter registration is deterministic") {
  auto build = [] {
    Rng rng(11);
    ParamStore<float> ps;
    nn::Encoder<float> enc;
    enc.init(ps, "enc", 8, 2, 2, rng);
    return ps.w;
  };
  CHECK(build() == build());
}
