#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "cmt/metrics.hpp"
#include "cmt/synth.hpp"

using namespace cmt;

namespace {

// O(N^2) oracles, independent of the kernel implementations.
double brute_chamfer(const PointSample& a, const PointSample& b) {
  auto one_way = [](const PointSample& x, const PointSample& y) {
    double acc = 0;
    for (const auto& p : x.points) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : y.points) best = std::min(best, dist(p, q));
      acc += best;
    }
    return acc / double(x.points.size());
  };
  return one_way(a, b) + one_way(b, a);
}

PointSample cube_sample(double offset, int n, uint64_t seed) {
  ShapeSpec s;
  s.family = ShapeFamily::Box;
  s.dx = s.dy = s.dz = 1.0;
  BRepModel m = synth_generate(s);
  for (auto& sp : m.surfaces)
    for (auto& p : sp.grid) p += {offset, 0, 0};
  Rng rng(seed);
  return sample_points(m, n, rng);
}

}  // namespace

TEST_CASE("chamfer/f-score/normal consistency are exact on identical samples") {
  PointSample a = cube_sample(0.0, 300, 5);
  CHECK(chamfer(a, a) == 0.0);
  CHECK(f_score(a, a) == 100.0);
  CHECK(normal_consistency(a, a) == doctest::Approx(100.0));
}

TEST_CASE("chamfer is symmetric and matches the brute-force oracle") {
  PointSample a = cube_sample(0.0, 180, 5);
  PointSample b = cube_sample(0.1, 160, 6);
  double c1 = chamfer(a, b);
  double c2 = chamfer(b, a);
  CHECK(c1 == doctest::Approx(c2).epsilon(1e-12));
  CHECK(c1 == doctest::Approx(brute_chamfer(a, b)).epsilon(1e-9));
  CHECK(c1 > 0.0);
}

TEST_CASE("metrics reject empty inputs") {
  PointSample a = cube_sample(0.0, 10, 1);
  PointSample empty;
  CHECK_THROWS(chamfer(a, empty));
  CHECK_THROWS(f_score(empty, a));
}

TEST_CASE("distributional metrics: identical sets") {
  std::vector<PointSample> set;
  for (int i = 0; i < 5; ++i) set.push_back(cube_sample(0.2 * i, 120, 10 + i));
  auto r = distributional(set, set);
  CHECK(r.cov == 100.0);
  CHECK(r.mmd == 0.0);
  CHECK(r.jsd == doctest::Approx(0.0));
}

TEST_CASE("distributional metrics: one duplicated generator covers one reference") {
  std::vector<PointSample> ref;
  for (int i = 0; i < 5; ++i) ref.push_back(cube_sample(0.3 * i, 120, 20 + i));
  std::vector<PointSample> gen = {ref[2], ref[2], ref[2]};
  auto r = distributional(gen, ref);
  CHECK(r.cov == doctest::Approx(100.0 / 5.0));
  CHECK(r.mmd > 0.0);
}

TEST_CASE("distributional metrics match a brute-force oracle on 5x5 toy sets") {
  std::vector<PointSample> gen, ref;
  for (int i = 0; i < 5; ++i) {
    gen.push_back(cube_sample(0.13 * i, 60, 31 + i));
    ref.push_back(cube_sample(0.11 * i + 0.05, 60, 41 + i));
  }
  auto r = distributional(gen, ref);

  // oracle: exhaustive chamfer matrix with the brute-force chamfer
  std::vector<std::vector<double>> d(5, std::vector<double>(5));
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) d[i][j] = brute_chamfer(gen[i], ref[j]);
  std::vector<bool> covered(5, false);
  for (int i = 0; i < 5; ++i) {
    int best = 0;
    for (int j = 1; j < 5; ++j)
      if (d[i][j] < d[i][best]) best = j;
    covered[best] = true;
  }
  int ncov = 0;
  for (bool c : covered) ncov += c;
  double mmd = 0;
  for (int j = 0; j < 5; ++j) {
    double best = d[0][j];
    for (int i = 1; i < 5; ++i) best = std::min(best, d[i][j]);
    mmd += best;
  }
  mmd = 100.0 * mmd / 5.0;
  CHECK(r.cov == doctest::Approx(100.0 * ncov / 5.0).epsilon(1e-9));
  CHECK(r.mmd == doctest::Approx(mmd).epsilon(1e-9));
  CHECK_THROWS(distributional({gen[0]}, ref));
}

TEST_CASE("novel/unique/valid ratios") {
  Rng rng(77);
  std::vector<BRepModel> train;
  std::unordered_set<uint64_t> train_hashes;
  for (int i = 0; i < 6; ++i) {
    train.push_back(synth_generate(random_spec(rng)));
    train_hashes.insert(quantize_hash(train.back()));
  }

  SUBCASE("all-identical generation") {
    std::vector<BRepModel> gen(4, train[0]);
    auto r = novel_unique_valid(gen, train_hashes);
    CHECK(r.unique == doctest::Approx(100.0 / 4.0));
    CHECK(r.novel == 0.0);
    CHECK(r.valid == 100.0);
  }
  SUBCASE("fresh models are novel") {
    std::vector<BRepModel> gen;
    for (int i = 0; i < 4; ++i) gen.push_back(synth_generate(random_spec(rng)));
    auto r = novel_unique_valid(gen, train_hashes);
    CHECK(r.novel == 100.0);
    CHECK(r.unique == 100.0);
    CHECK(r.valid == 100.0);
  }
  SUBCASE("training subset verbatim") {
    std::vector<BRepModel> gen = {train[0], train[1], train[2]};
    auto r = novel_unique_valid(gen, train_hashes);
    CHECK(r.novel == 0.0);
    CHECK(r.unique == 100.0);
  }
}

TEST_CASE("metrics are permutation-invariant over set order") {
  std::vector<PointSample> gen, ref;
  for (int i = 0; i < 4; ++i) {
    gen.push_back(cube_sample(0.17 * i, 50, 51 + i));
    ref.push_back(cube_sample(0.19 * i, 50, 61 + i));
  }
  auto r1 = distributional(gen, ref);
  std::swap(gen[0], gen[3]);
  std::swap(ref[1], ref[2]);
  auto r2 = distributional(gen, ref);
  CHECK(r1.cov == doctest::Approx(r2.cov));
  CHECK(r1.mmd == doctest::Approx(r2.mmd).epsilon(1e-12));
  CHECK(r1.jsd == doctest::Approx(r2.jsd).epsilon(1e-12));
}
