#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cmt/topology.hpp"
#include "gradcheck.hpp"

using namespace cmt;

TEST_CASE("zero weights score 0.5 everywhere") {
  Rng rng(1);
  TopoHead<double> topo;
  topo.init(10, 12, 8, rng);
  std::fill(topo.ps.w.begin(), topo.ps.w.end(), 0.0);
  Mat<double> e(4, 10), s(3, 12);
  for (auto& v : e.a) v = rng.normal();
  for (auto& v : s.a) v = rng.normal();
  Mat<double> a = topo.predict(e, s);
  REQUIRE(a.rows == 4);
  REQUIRE(a.cols == 3);
  for (double v : a.a) CHECK(v == 0.5);
}

TEST_CASE("prediction shape follows the token counts") {
  Rng rng(2);
  TopoHead<double> topo;
  topo.init(20, 22, 16, rng);
  for (auto [ne, ns] : {std::pair{12, 6}, std::pair{18, 8}}) {
    Mat<double> e(ne, 20), s(ns, 22);
    for (auto& v : e.a) v = rng.normal();
    for (auto& v : s.a) v = rng.normal();
    Mat<double> a = topo.predict(e, s);
    CHECK(a.rows == ne);
    CHECK(a.cols == ns);
    for (double v : a.a) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
  }
  Mat<double> empty(0, 20), s(3, 22);
  CHECK_THROWS(topo.predict(empty, s));
}

TEST_CASE("prediction is deterministic") {
  Rng rng(3);
  TopoHead<double> topo;
  topo.init(8, 9, 6, rng);
  Mat<double> e(5, 8), s(4, 9);
  for (auto& v : e.a) v = rng.normal();
  for (auto& v : s.a) v = rng.normal();
  auto a1 = topo.predict(e, s);
  auto a2 = topo.predict(e, s);
  CHECK(a1.a == a2.a);
}

TEST_CASE("threshold semantics") {
  std::vector<std::vector<double>> a = {{0.5, 0.51}, {0.49, 1.0}};
  auto r = threshold(a, 0.5);
  CHECK(r[0][0] == 0);  // strict inequality at the boundary
  CHECK(r[0][1] == 1);
  CHECK(r[1][0] == 0);
  CHECK(r[1][1] == 1);

  // binary scores pass through
  std::vector<std::vector<double>> b = {{1, 0}, {0, 1}};
  auto rb = threshold(b, 0.5);
  CHECK(rb[0][0] == 1);
  CHECK(rb[1][1] == 1);
  CHECK(rb[0][1] == 0);

  // tau -> 1 clears everything
  auto r1 = threshold(a, 1.0);
  for (const auto& row : r1)
    for (auto v : row) CHECK(v == 0);
}

TEST_CASE("threshold is monotone in the scores") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::vector<double>> a(3, std::vector<double>(4));
    for (auto& row : a)
      for (auto& v : row) v = rng.uniform();
    auto r = threshold(a, 0.5);
    int i = rng.uniform_int(3), j = rng.uniform_int(4);
    a[i][j] = std::min(1.0, a[i][j] + rng.uniform());
    auto r2 = threshold(a, 0.5);
    for (int x = 0; x < 3; ++x)
      for (int y = 0; y < 4; ++y)
        if (r[x][y]) CHECK(r2[x][y]);  // raising a score never clears a bit
  }
}

TEST_CASE("topo_loss hand-computed cases") {
  std::vector<std::vector<uint8_t>> r = {{1, 0}, {0, 1}};
  std::vector<std::vector<double>> a_exact = {{1, 0}, {0, 1}};
  CHECK(topo_loss(a_exact, r) == 0.0);

  std::vector<std::vector<double>> a_half = {{0.5, 0.5}, {0.5, 0.5}};
  CHECK(topo_loss(a_half, r) == doctest::Approx(0.25));

  std::vector<std::vector<double>> bad_shape = {{0.5}};
  CHECK_THROWS(topo_loss(bad_shape, r));
}

TEST_CASE("topo_loss stays within [0,1] for scores in [0,1]") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    int ne = 1 + rng.uniform_int(6), ns = 1 + rng.uniform_int(6);
    std::vector<std::vector<double>> a(ne, std::vector<double>(ns));
    std::vector<std::vector<uint8_t>> r(ne, std::vector<uint8_t>(ns));
    for (int i = 0; i < ne; ++i)
      for (int j = 0; j < ns; ++j) {
        a[i][j] = rng.uniform();
        r[i][j] = rng.uniform() < 0.5 ? 1 : 0;
      }
    double l = topo_loss(a, r);
    CHECK(l >= 0.0);
    CHECK(l <= 1.0);
  }
}

TEST_CASE("total loss is the unweighted sum") {
  CHECK(total_loss(0, 0, 0) == 0.0);
  CHECK(total_loss(1, 2, 3) == 6.0);
  // unit weighting: d(total)/d(topo) = 1
  const double h = 1e-7;
  CHECK((total_loss(1, 2, 3 + h) - total_loss(1, 2, 3 - h)) / (2 * h) == doctest::Approx(1.0));
}

TEST_CASE("topo head training gradients match finite differences") {
  Rng rng(6);
  TopoHead<double> topo;
  topo.init(7, 9, 5, rng);
  Mat<double> e(6, 7), s(4, 9);
  for (auto& v : e.a) v = rng.normal();
  for (auto& v : s.a) v = rng.normal();
  std::vector<uint8_t> r(24);
  for (auto& v : r) v = rng.uniform() < 0.3 ? 1 : 0;

  auto loss = [&] {
    TopoHead<double> copy = topo;
    return copy.loss_and_grad(e, s, r);
  };
  topo.ps.zero_grad();
  topo.loss_and_grad(e, s, r);
  auto gc = testing::gradcheck(topo.ps, loss, 60, rng);
  CHECK(gc.max_rel_err < 1e-6);
}
