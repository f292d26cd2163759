#include "cmt/assembler.hpp"

#include <stdexcept>

#include "cmt/frame.hpp"
#include "json.hpp"

namespace cmt {

namespace {

BBox bbox_from_token(std::span<const double> t) {
  BBox b;
  b.x1 = std::min(t[0], t[3]);
  b.y1 = std::min(t[1], t[4]);
  b.z1 = std::min(t[2], t[5]);
  b.x2 = std::max(t[0], t[3]);
  b.y2 = std::max(t[1], t[4]);
  b.z2 = std::max(t[2], t[5]);
  return b;
}

}  // namespace

AssembleResult assemble(const TokenizedModel& tm, int grid_n, int edge_m,
                        const DecodeFn& decode_surface, const DecodeFn& decode_edge, double eps) {
  AssembleResult out;
  if (tm.edge_tokens.empty() || tm.surf_tokens.empty()) {
    out.report.fail(FailureCode::EMPTY, "no edge or surface tokens");
    return out;
  }

  for (const auto& t : tm.surf_tokens) {
    if (int(t.size()) != 6 + tm.d_s) throw std::invalid_argument("assemble: bad surface token size");
    BBox b = bbox_from_token(std::span<const double>(t.data(), 6));
    std::vector<double> local = decode_surface(std::span<const double>(t.data() + 6, tm.d_s));
    if (int(local.size()) != grid_n * grid_n * 3)
      throw std::runtime_error("assemble: surface decoder returned wrong size");
    SurfacePatch p;
    p.n = grid_n;
    p.grid = from_local_flat(local, b);
    for (const auto& q : p.grid)
      if (!finite(q)) throw std::runtime_error("assemble: non-finite decoded surface");
    out.model.surfaces.push_back(std::move(p));
  }

  for (const auto& t : tm.edge_tokens) {
    if (int(t.size()) != tm.d_e + 12) throw std::invalid_argument("assemble: bad edge token size");
    BBox b = bbox_from_token(std::span<const double>(t.data() + tm.d_e, 6));
    Point3 start{t[tm.d_e + 6], t[tm.d_e + 7], t[tm.d_e + 8]};
    Point3 end{t[tm.d_e + 9], t[tm.d_e + 10], t[tm.d_e + 11]};
    std::vector<double> local = decode_edge(std::span<const double>(t.data(), tm.d_e));
    if (int(local.size()) != edge_m * 3)
      throw std::runtime_error("assemble: edge decoder returned wrong size");
    EdgeCurve e;
    e.points = from_local_flat(local, b);
    for (const auto& q : e.points)
      if (!finite(q)) throw std::runtime_error("assemble: non-finite decoded edge");
    // blend so the curve meets the token's endpoints exactly; closed tokens
    // (start == end) stay closed
    Point3 ds = start - e.points.front();
    Point3 de = end - e.points.back();
    const int m = int(e.points.size());
    for (int i = 0; i < m; ++i) {
      double s = double(i) / (m - 1);
      e.points[i] += ds * (1.0 - s) + de * s;
    }
    out.model.edges.push_back(std::move(e));
  }

  out.model.adjacency = tm.adjacency;
  if (int(out.model.adjacency.size()) != out.model.num_edges())
    throw std::invalid_argument("assemble: adjacency row count mismatch");
  for (auto& row : out.model.adjacency)
    if (int(row.size()) != out.model.num_surfaces())
      throw std::invalid_argument("assemble: adjacency column count mismatch");

  // weld endpoints: replace each endpoint with its cluster centroid so the
  // exported geometry carries the vertex identification
  VertexClustering vc = cluster_vertices(out.model, eps);
  for (int e = 0; e < out.model.num_edges(); ++e) {
    auto& pts = out.model.edges[e].points;
    Point3 s = vc.vertices[vc.start_vertex[e]];
    Point3 t = vc.vertices[vc.end_vertex[e]];
    Point3 ds = s - pts.front();
    Point3 de = t - pts.back();
    const int m = int(pts.size());
    for (int i = 0; i < m; ++i) {
      double f = double(i) / (m - 1);
      pts[i] += ds * (1.0 - f) + de * f;
    }
  }

  out.report = validate_brep(out.model, eps);
  return out;
}

std::string report_to_json(const ValidityReport& rep) {
  nlohmann::ordered_json j;
  j["valid"] = rep.valid;
  j["failures"] = nlohmann::ordered_json::array();
  for (const auto& f : rep.failures) {
    nlohmann::ordered_json jf;
    jf["code"] = failure_code_name(f.first);
    jf["detail"] = f.second;
    j["failures"].push_back(std::move(jf));
  }
  return j.dump(2);
}

}  // namespace cmt
