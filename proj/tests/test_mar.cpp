#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cmt/mar.hpp"
#include "gradcheck.hpp"

using namespace cmt;

namespace {

MarNet<double> tiny_net(Rng& rng, std::vector<SectionSpec> sections = {{5, 6}}, int prefix_k = 2,
                        int cond_d = 8) {
  MarNet<double> net;
  net.init(sections, 16, 2, 4, prefix_k, cond_d, 16, 2, 12, true, rng);
  return net;
}

MarNet<double>::TrainPlan random_plan(const MarNet<double>& net, int B, Rng& rng) {
  MarNet<double>::TrainPlan plan;
  plan.B = B;
  plan.tokens.resize(net.sections.size());
  plan.eps.resize(net.sections.size());
  for (size_t s = 0; s < net.sections.size(); ++s) {
    plan.tokens[s] = Mat<double>(B * net.sections[s].length, net.sections[s].token_dim);
    plan.eps[s] = Mat<double>(B * net.sections[s].length, net.sections[s].token_dim);
    for (auto& v : plan.tokens[s].a) v = rng.normal() * 0.5;
    for (auto& v : plan.eps[s].a) v = rng.normal();
  }
  plan.masked.assign(size_t(B) * net.L_total, 0);
  plan.t.assign(size_t(B) * net.L_total, 1);
  for (int b = 0; b < B; ++b) {
    MaskPlan mp = random_mask_plan(net.L_total, 0.4, 0.9, rng);
    for (int s = 0; s < net.L_total; ++s) {
      plan.masked[b * net.L_total + s] = mp.masked[s];
      plan.t[b * net.L_total + s] = 1 + rng.uniform_int(net.sched.steps);
    }
  }
  return plan;
}

}  // namespace

TEST_CASE("all-masked forward gives identical slot outputs when positions are zeroed") {
  Rng rng(1);
  auto net = tiny_net(rng);
  std::fill(net.ps.ptr(net.pos_embed), net.ps.ptr(net.pos_embed) + net.pos_embed.size(), 0.0);

  Mat<double> prefix(2, 8);
  for (auto& v : prefix.a) v = rng.normal();
  std::vector<Mat<double>> tokens = {Mat<double>(6, 5)};
  std::vector<uint8_t> masked(6, 1);
  MarNet<double>::ForwardCache fc;
  Mat<double> h = net.forward(prefix, tokens, masked, 1, fc);
  for (int s = 1; s < 6; ++s)
    for (int j = 0; j < 16; ++j)
      CHECK(h.at(net.prefix_k + s, j) == doctest::Approx(h.at(net.prefix_k, j)));
}

TEST_CASE("changing a visible token changes masked-slot outputs") {
  Rng rng(2);
  auto net = tiny_net(rng);
  Mat<double> prefix(2, 8);
  for (auto& v : prefix.a) v = rng.normal();
  std::vector<Mat<double>> tokens = {Mat<double>(6, 5)};
  for (auto& v : tokens[0].a) v = rng.normal();
  std::vector<uint8_t> masked = {1, 0, 1, 1, 0, 1};

  MarNet<double>::ForwardCache f1, f2;
  Mat<double> h1 = net.forward(prefix, tokens, masked, 1, f1);
  tokens[0].at(1, 2) += 0.9;
  Mat<double> h2 = net.forward(prefix, tokens, masked, 1, f2);
  double diff = 0;
  for (int j = 0; j < 16; ++j) diff += std::abs(h1.at(net.prefix_k + 0, j) - h2.at(net.prefix_k + 0, j));
  CHECK(diff > 1e-6);
}

TEST_CASE("mask plan length mismatch is rejected") {
  Rng rng(3);
  auto net = tiny_net(rng);
  Mat<double> prefix(2, 8);
  std::vector<Mat<double>> tokens = {Mat<double>(6, 5)};
  std::vector<uint8_t> masked(5, 1);
  MarNet<double>::ForwardCache fc;
  CHECK_THROWS(net.forward(prefix, tokens, masked, 1, fc));
}

TEST_CASE("train loss covers masked slots only") {
  Rng rng(4);
  auto net = tiny_net(rng);
  const int B = 2;
  auto plan = random_plan(net, B, rng);
  Mat<double> prefix(B * 2, 8);
  for (auto& v : prefix.a) v = rng.normal();

  net.ps.zero_grad();
  auto r1 = net.train_loss(prefix, plan);

  // zeroing the noise (and hence the denoising target pair) of a visible slot
  // cannot change the loss
  int visible_slot = -1;
  for (int s = 0; s < net.L_total; ++s)
    if (!plan.masked[s]) {
      visible_slot = s;
      break;
    }
  REQUIRE(visible_slot >= 0);
  for (int j = 0; j < 5; ++j) plan.eps[0].at(visible_slot, j) = 0.0;
  net.ps.zero_grad();
  auto r2 = net.train_loss(prefix, plan);
  CHECK(r1.loss == doctest::Approx(r2.loss).epsilon(1e-12));
}

TEST_CASE("mar training gradients match finite differences (64-bit)") {
  Rng rng(5);
  auto net = tiny_net(rng);
  const int B = 2;
  auto plan = random_plan(net, B, rng);
  Mat<double> prefix(B * 2, 8);
  for (auto& v : prefix.a) v = rng.normal();

  auto loss = [&] {
    MarNet<double> copy = net;  // grads in ps are scratch; params shared by value copy
    return copy.train_loss(prefix, plan).loss;
  };
  net.ps.zero_grad();
  auto res = net.train_loss(prefix, plan);
  auto gc = testing::gradcheck(net.ps, loss, 60, rng);
  CHECK(gc.max_rel_err < 1e-4);

  // prefix gradient
  const double h = 1e-6;
  for (int probe = 0; probe < 10; ++probe) {
    int i = rng.uniform_int(prefix.rows), j = rng.uniform_int(8);
    double saved = prefix.at(i, j);
    prefix.at(i, j) = saved + h;
    double lp = loss();
    prefix.at(i, j) = saved - h;
    double lm = loss();
    prefix.at(i, j) = saved;
    CHECK(res.dprefix.at(i, j) == doctest::Approx((lp - lm) / (2 * h)).epsilon(2e-4));
  }
}

TEST_CASE("two-section nets gather per-section losses") {
  Rng rng(6);
  auto net = tiny_net(rng, {{5, 4}, {7, 3}});
  const int B = 2;
  auto plan = random_plan(net, B, rng);
  Mat<double> prefix(B * 2, 8);
  for (auto& v : prefix.a) v = rng.normal();
  net.ps.zero_grad();
  auto res = net.train_loss(prefix, plan);
  CHECK(res.section_loss.size() == 2);
  CHECK(res.loss == doctest::Approx(res.section_loss[0] + res.section_loss[1]));
  CHECK(res.loss > 0.0);

  auto loss = [&] {
    MarNet<double> copy = net;
    return copy.train_loss(prefix, plan).loss;
  };
  auto gc = testing::gradcheck(net.ps, loss, 40, rng);
  CHECK(gc.max_rel_err < 1e-4);
}

TEST_CASE("unmask groups form a balanced partition") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    int L = 1 + rng.uniform_int(40);
    int n = 1 + rng.uniform_int(L);
    auto groups = unmask_groups(L, n, rng);
    CHECK(int(groups.size()) == n);
    std::vector<bool> seen(L, false);
    size_t mn = L, mx = 0;
    for (const auto& g : groups) {
      mn = std::min(mn, g.size());
      mx = std::max(mx, g.size());
      for (int s : g) {
        CHECK(!seen[s]);
        seen[s] = true;
      }
    }
    CHECK(mx - mn <= 1);
    for (bool b : seen) CHECK(b);
  }
}

TEST_CASE("n_steps = L reveals one token per step; n_steps = 1 reveals all") {
  Rng rng(8);
  auto g1 = unmask_groups(9, 9, rng);
  for (const auto& g : g1) CHECK(g.size() == 1);
  auto g2 = unmask_groups(9, 1, rng);
  CHECK(g2.size() == 1);
  CHECK(g2[0].size() == 9);
}

TEST_CASE("mask ratio in [0.7, 1.0] never yields an empty masked set") {
  Rng rng(9);
  for (int L = 1; L <= 40; ++L)
    for (int k = 0; k < 20; ++k) {
      auto p = random_mask_plan(L, 0.7, 1.0, rng);
      CHECK(p.count() >= 1);
      CHECK(p.count() <= L);
    }
}

TEST_CASE("generation is deterministic and fills every slot") {
  Rng rng(10);
  auto net = tiny_net(rng);
  Mat<double> prefix(2, 8);
  for (auto& v : prefix.a) v = rng.normal();

  Rng g1(42), g2(42);
  auto t1 = net.generate(prefix, 3, g1);
  auto t2 = net.generate(prefix, 3, g2);
  REQUIRE(t1.size() == 1);
  CHECK(t1[0].a == t2[0].a);
  CHECK(t1[0].rows == 6);
  // shape is identical across step counts
  Rng g3(42);
  auto t3 = net.generate(prefix, 1, g3);
  CHECK(t3[0].rows == t1[0].rows);
  CHECK(t3[0].cols == t1[0].cols);
}

TEST_CASE("edge projector: fixed output shape for any edge count") {
  Rng rng(11);
  EdgeProjector<double> proj;
  proj.init(17, 8, 4, 2, 4, rng);
  Mat<double> z(3, 8);
  for (auto& v : z.a) v = rng.normal();
  for (int n_e : {2, 12, 18}) {
    Mat<double> edges(n_e, 17);
    for (auto& v : edges.a) v = rng.normal();
    EdgeProjector<double>::Cache c;
    Mat<double> q = proj.forward(edges, z, c);
    CHECK(q.rows == 4);
    CHECK(q.cols == 8);
    CHECK(q.finite());
  }
  // empty edge sequence: condition only
  Mat<double> none(0, 17);
  EdgeProjector<double>::Cache c;
  Mat<double> q = proj.forward(none, z, c);
  CHECK(q.rows == 4);
  CHECK(q.finite());
}

TEST_CASE("edge projector gradients match finite differences") {
  Rng rng(12);
  EdgeProjector<double> proj;
  proj.init(9, 6, 3, 2, 3, rng);
  Mat<double> z(2, 6), edges(5, 9), C(3, 6);
  for (auto& v : z.a) v = rng.normal();
  for (auto& v : edges.a) v = rng.normal();
  for (auto& v : C.a) v = rng.normal();

  auto loss = [&] {
    EdgeProjector<double> copy = proj;
    EdgeProjector<double>::Cache c;
    Mat<double> q = copy.forward(edges, z, c);
    double s = 0;
    for (size_t i = 0; i < q.size(); ++i) s += q.a[i] * C.a[i];
    return s;
  };
  proj.ps.zero_grad();
  EdgeProjector<double>::Cache cache;
  proj.forward(edges, z, cache);
  Mat<double> dz = proj.backward(C, cache);
  auto gc = testing::gradcheck(proj.ps, loss, 60, rng);
  CHECK(gc.max_rel_err < 1e-5);

  const double h = 1e-6;
  for (int probe = 0; probe < 10; ++probe) {
    int i = rng.uniform_int(2), j = rng.uniform_int(6);
    double saved = z.at(i, j);
    z.at(i, j) = saved + h;
    double lp = loss();
    z.at(i, j) = saved - h;
    double lm = loss();
    z.at(i, j) = saved;
    CHECK(dz.at(i, j) == doctest::Approx((lp - lm) / (2 * h)).epsilon(1e-4));
  }
}
