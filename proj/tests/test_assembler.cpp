#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cmt/assembler.hpp"
#include "cmt/frame.hpp"
#include "cmt/synth.hpp"

using namespace cmt;

namespace {

// Oracle tokenization with identity latents: the "latent" IS the local-frame
// geometry, and the decoders just return it. Exercises assembly placement,
// endpoint snapping, welding and validation without a trained VAE.
TokenizedModel identity_tokens(const BRepModel& m) {
  TokenizedModel tm;
  tm.d_s = int(m.surfaces[0].grid.size()) * 3;
  tm.d_e = int(m.edges[0].points.size()) * 3;
  for (const auto& s : m.surfaces) {
    BBox b = s.bbox();
    std::vector<double> tok = {b.x1, b.y1, b.z1, b.x2, b.y2, b.z2};
    for (double v : to_local_flat(s.grid, b)) tok.push_back(v);
    tm.surf_tokens.push_back(std::move(tok));
  }
  for (const auto& e : m.edges) {
    BBox b = e.bbox();
    std::vector<double> tok = to_local_flat(e.points, b);
    for (double v : {b.x1, b.y1, b.z1, b.x2, b.y2, b.z2}) tok.push_back(v);
    for (double v : {e.start().x, e.start().y, e.start().z}) tok.push_back(v);
    for (double v : {e.end().x, e.end().y, e.end().z}) tok.push_back(v);
    tm.edge_tokens.push_back(std::move(tok));
  }
  tm.adjacency = m.adjacency;
  return tm;
}

DecodeFn identity_decoder() {
  return [](std::span<const double> latent) {
    return std::vector<double>(latent.begin(), latent.end());
  };
}

}  // namespace

TEST_CASE("assemble reproduces geometry and topology with oracle decoders") {
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    BRepModel m = synth_generate(random_spec(rng));
    TokenizedModel tm = identity_tokens(m);
    auto res = assemble(tm, 8, 8, identity_decoder(), identity_decoder());
    REQUIRE_MESSAGE(res.report.valid, "iteration ", k);
    REQUIRE(res.model.num_edges() == m.num_edges());
    REQUIRE(res.model.num_surfaces() == m.num_surfaces());
    CHECK(res.model.adjacency == m.adjacency);
    double max_err = 0;
    for (int i = 0; i < m.num_surfaces(); ++i)
      for (size_t j = 0; j < m.surfaces[i].grid.size(); ++j)
        max_err = std::max(max_err, dist(res.model.surfaces[i].grid[j], m.surfaces[i].grid[j]));
    for (int i = 0; i < m.num_edges(); ++i)
      for (size_t j = 0; j < m.edges[i].points.size(); ++j)
        max_err = std::max(max_err, dist(res.model.edges[i].points[j], m.edges[i].points[j]));
    CHECK(max_err < 1e-9);
  }
}

TEST_CASE("assemble flags an all-zero adjacency row") {
  Rng rng(4);
  ShapeSpec s;
  s.family = ShapeFamily::Box;
  BRepModel m = synth_generate(s);
  TokenizedModel tm = identity_tokens(m);
  for (auto& v : tm.adjacency[3]) v = 0;
  auto res = assemble(tm, 8, 8, identity_decoder(), identity_decoder());
  CHECK_FALSE(res.report.valid);
  CHECK(res.report.has(FailureCode::EDGE_INCIDENCE));
}

TEST_CASE("assemble flags jittered endpoints") {
  ShapeSpec s;
  s.family = ShapeFamily::Box;
  BRepModel m = synth_generate(s);
  TokenizedModel tm = identity_tokens(m);
  // move edge 0's token endpoint by 10 * eps
  const double eps = kVertexEps;
  size_t start_off = tm.edge_tokens[0].size() - 6;
  tm.edge_tokens[0][start_off] += 10 * eps;
  auto res = assemble(tm, 8, 8, identity_decoder(), identity_decoder(), eps);
  CHECK_FALSE(res.report.valid);
  CHECK(res.report.has(FailureCode::ENDPOINT_MISMATCH));
}

TEST_CASE("assemble reports empty inputs") {
  TokenizedModel tm;
  tm.d_e = 6;
  tm.d_s = 6;
  auto res = assemble(tm, 8, 8, identity_decoder(), identity_decoder());
  CHECK_FALSE(res.report.valid);
  CHECK(res.report.has(FailureCode::EMPTY));
}

TEST_CASE("curves are snapped onto their token endpoints") {
  ShapeSpec s;
  s.family = ShapeFamily::Box;
  BRepModel m = synth_generate(s);
  TokenizedModel tm = identity_tokens(m);
  // displace all of edge 0's endpoints consistently: its partners at the two
  // cube corners stay within the 0.05 weld radius used for generated models
  size_t off = tm.edge_tokens[0].size() - 6;
  for (int c = 0; c < 3; ++c) {
    tm.edge_tokens[0][off + c] += 0.03;
    tm.edge_tokens[0][off + 3 + c] += 0.03;
  }
  auto res = assemble(tm, 8, 8, identity_decoder(), identity_decoder(), 0.1);
  CHECK(res.report.valid);  // weld absorbs the displacement
  // the welded endpoint is the centroid of the cluster, so the curve moved
  const auto& e0 = res.model.edges[0];
  CHECK(dist(e0.start(), m.edges[0].start()) > 1e-4);
  CHECK(dist(e0.start(), m.edges[0].start()) < 0.05);
}

TEST_CASE("welding keeps closed generated edges closed") {
  ShapeSpec s;
  s.family = ShapeFamily::Cylinder;
  BRepModel m = synth_generate(s);
  TokenizedModel tm = identity_tokens(m);
  // nudge the circle token's end away from its start by less than the weld eps
  size_t off = tm.edge_tokens[0].size() - 3;
  tm.edge_tokens[0][off + 0] += 0.02;
  auto res = assemble(tm, 8, 8, identity_decoder(), identity_decoder(), 0.1);
  CHECK(res.report.valid);
  CHECK(res.model.edges[0].closed(1e-9));
}

TEST_CASE("invalid models still assemble for inspection") {
  ShapeSpec s;
  s.family = ShapeFamily::Box;
  BRepModel m = synth_generate(s);
  TokenizedModel tm = identity_tokens(m);
  for (auto& row : tm.adjacency)
    for (auto& v : row) v = 0;
  auto res = assemble(tm, 8, 8, identity_decoder(), identity_decoder());
  CHECK_FALSE(res.report.valid);
  CHECK(res.model.num_surfaces() == 6);  // geometry is still there
  std::string j = report_to_json(res.report);
  CHECK(j.find("EDGE_INCIDENCE") != std::string::npos);
  CHECK(j.find("\"valid\": false") != std::string::npos);
}
