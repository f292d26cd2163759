#include "cmt/brep.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace cmt {

BBox SurfacePatch::bbox() const {
  BBox b = BBox::empty();
  for (const auto& p : grid) b.expand(p);
  return b;
}

BBox EdgeCurve::bbox() const {
  BBox b = BBox::empty();
  for (const auto& p : points) b.expand(p);
  return b;
}

BBox BRepModel::bbox() const {
  BBox b = BBox::empty();
  for (const auto& s : surfaces) b.expand(s.bbox());
  for (const auto& e : edges) b.expand(e.bbox());
  return b;
}

// --- normalization ---------------------------------------------------------

NormalizeResult normalize(const BRepModel& model) {
  if (model.empty()) throw std::invalid_argument("normalize: empty model");
  BBox b = model.bbox();
  if (!b.valid()) throw std::invalid_argument("normalize: non-finite coordinates");
  double ext = b.max_extent();
  if (ext <= 0.0) throw std::invalid_argument("normalize: degenerate model (zero extent)");

  NormalizeResult r;
  r.scale = 2.0 / ext;
  Point3 c = b.center();
  r.offset = {-c.x * r.scale, -c.y * r.scale, -c.z * r.scale};

  auto map = [&](const Point3& p) -> Point3 {
    return {p.x * r.scale + r.offset.x, p.y * r.scale + r.offset.y, p.z * r.scale + r.offset.z};
  };
  r.model = model;
  for (auto& s : r.model.surfaces)
    for (auto& p : s.grid) p = map(p);
  for (auto& e : r.model.edges)
    for (auto& p : e.points) p = map(p);
  return r;
}

BRepModel denormalize(const BRepModel& model, double scale, const Point3& offset) {
  BRepModel out = model;
  auto unmap = [&](const Point3& p) -> Point3 {
    return {(p.x - offset.x) / scale, (p.y - offset.y) / scale, (p.z - offset.z) / scale};
  };
  for (auto& s : out.surfaces)
    for (auto& p : s.grid) p = unmap(p);
  for (auto& e : out.edges)
    for (auto& p : e.points) p = unmap(p);
  return out;
}

// --- validity ---------------------------------------------------------------

const char* failure_code_name(FailureCode c) {
  switch (c) {
    case FailureCode::EDGE_INCIDENCE: return "EDGE_INCIDENCE";
    case FailureCode::ORPHAN_SURFACE: return "ORPHAN_SURFACE";
    case FailureCode::ENDPOINT_MISMATCH: return "ENDPOINT_MISMATCH";
    case FailureCode::OPEN_LOOP: return "OPEN_LOOP";
    case FailureCode::EMPTY: return "EMPTY";
  }
  return "?";
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

VertexClustering cluster_vertices(const BRepModel& model, double eps) {
  const int ne = model.num_edges();
  std::vector<Point3> pts;
  pts.reserve(size_t(ne) * 2);
  for (const auto& e : model.edges) {
    pts.push_back(e.start());
    pts.push_back(e.end());
  }
  UnionFind uf(int(pts.size()));
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j)
      if (dist(pts[i], pts[j]) <= eps) uf.unite(int(i), int(j));

  VertexClustering vc;
  vc.start_vertex.resize(ne);
  vc.end_vertex.resize(ne);
  std::vector<int> root_to_id(pts.size(), -1);
  std::vector<int> counts;
  for (size_t i = 0; i < pts.size(); ++i) {
    int r = uf.find(int(i));
    if (root_to_id[r] < 0) {
      root_to_id[r] = int(vc.vertices.size());
      vc.vertices.push_back({0, 0, 0});
      counts.push_back(0);
    }
    int id = root_to_id[r];
    vc.vertices[id] += pts[i];
    counts[id] += 1;
    if (i % 2 == 0)
      vc.start_vertex[int(i / 2)] = id;
    else
      vc.end_vertex[int(i / 2)] = id;
  }
  for (size_t k = 0; k < vc.vertices.size(); ++k) vc.vertices[k] = vc.vertices[k] * (1.0 / counts[k]);
  return vc;
}

ValidityReport validate_brep(const BRepModel& model, double eps) {
  ValidityReport rep;
  if (model.empty() || model.num_edges() == 0 || model.num_surfaces() == 0) {
    rep.fail(FailureCode::EMPTY, "model has no edges or no surfaces");
    return rep;
  }
  const int ne = model.num_edges();
  const int ns = model.num_surfaces();
  if (int(model.adjacency.size()) != ne) {
    rep.fail(FailureCode::EDGE_INCIDENCE, "adjacency row count != edge count");
    return rep;
  }

  for (int e = 0; e < ne; ++e) {
    int sum = 0;
    for (int s = 0; s < ns; ++s) sum += model.adjacency[e][s] ? 1 : 0;
    if (sum != 2)
      rep.fail(FailureCode::EDGE_INCIDENCE,
               "edge " + std::to_string(e) + " incident to " + std::to_string(sum) + " surfaces");
  }
  for (int s = 0; s < ns; ++s) {
    int sum = 0;
    for (int e = 0; e < ne; ++e) sum += model.adjacency[e][s] ? 1 : 0;
    if (sum == 0) rep.fail(FailureCode::ORPHAN_SURFACE, "surface " + std::to_string(s) + " has no edges");
  }

  // Boundary loop closure: within each surface, the incident open edges must
  // give every vertex an even degree (closed edges are loops on their own).
  // A dangling vertex near another dangling vertex is reported as an endpoint
  // mismatch; anything else is an open loop.
  VertexClustering vc = cluster_vertices(model, eps);
  const double mismatch_window = 50.0 * eps;
  for (int s = 0; s < ns; ++s) {
    std::vector<int> degree(vc.vertices.size(), 0);
    bool any_open_edge = false;
    for (int e = 0; e < ne; ++e) {
      if (!model.adjacency[e][s]) continue;
      if (vc.start_vertex[e] == vc.end_vertex[e]) continue;  // closed edge: complete loop
      any_open_edge = true;
      degree[vc.start_vertex[e]] += 1;
      degree[vc.end_vertex[e]] += 1;
    }
    if (!any_open_edge) continue;
    std::vector<int> odd;
    for (size_t v = 0; v < degree.size(); ++v)
      if (degree[v] % 2 == 1) odd.push_back(int(v));
    if (odd.empty()) continue;
    bool near_miss = false;
    double best = 0.0;
    for (size_t i = 0; i < odd.size() && !near_miss; ++i)
      for (size_t j = i + 1; j < odd.size(); ++j) {
        double d = dist(vc.vertices[odd[i]], vc.vertices[odd[j]]);
        if (d <= mismatch_window) {
          near_miss = true;
          best = d;
          break;
        }
      }
    if (near_miss)
      rep.fail(FailureCode::ENDPOINT_MISMATCH,
               "surface " + std::to_string(s) + " endpoint gap " + std::to_string(best));
    else
      rep.fail(FailureCode::OPEN_LOOP, "surface " + std::to_string(s) + " boundary does not close");
  }
  return rep;
}

int euler_characteristic(const BRepModel& model, double eps) {
  VertexClustering vc = cluster_vertices(model, eps);
  return int(vc.vertices.size()) - model.num_edges() + model.num_surfaces();
}

// --- dedup hash --------------------------------------------------------------

namespace {

uint64_t fnv1a(const uint8_t* data, size_t n) {
  uint64_t h = 1469598103934665603ULL;
  for (size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 1099511628211ULL;
  }
  return h;
}

uint32_t quantize_coord(double x, int bits) {
  const int nbins = 1 << bits;
  double t = (x + 1.0) * 0.5 * nbins;
  int q = int(std::floor(t));
  return uint32_t(std::clamp(q, 0, nbins - 1));
}

}  // namespace

uint64_t quantize_hash(const BRepModel& model, int bits, int pts_per_surface) {
  if (bits < 1 || bits > 16) throw std::invalid_argument("quantize_hash: bits must be in [1,16]");
  if (model.surfaces.empty()) throw std::invalid_argument("quantize_hash: empty model");

  std::vector<uint64_t> keys;
  for (const auto& s : model.surfaces) {
    const int total = int(s.grid.size());
    int stride = 1;
    if (pts_per_surface > 0 && total > pts_per_surface) stride = (total + pts_per_surface - 1) / pts_per_surface;
    for (int i = 0; i < total; i += stride) {
      const Point3& p = s.grid[i];
      uint64_t k = (uint64_t(quantize_coord(p.x, bits)) << 32) |
                   (uint64_t(quantize_coord(p.y, bits)) << 16) | uint64_t(quantize_coord(p.z, bits));
      keys.push_back(k);
    }
  }
  std::sort(keys.begin(), keys.end());
  return fnv1a(reinterpret_cast<const uint8_t*>(keys.data()), keys.size() * sizeof(uint64_t));
}

BRepModel quantize_coords(const BRepModel& model, int bits) {
  const int nbins = 1 << bits;
  const double w = 2.0 / nbins;
  auto q = [&](double x) { return -1.0 + (quantize_coord(x, bits) + 0.5) * w; };
  BRepModel out = model;
  for (auto& s : out.surfaces)
    for (auto& p : s.grid) p = {q(p.x), q(p.y), q(p.z)};
  for (auto& e : out.edges)
    for (auto& p : e.points) p = {q(p.x), q(p.y), q(p.z)};
  return out;
}

// --- point sampling -----------------------------------------------------------

PointSample sample_points(const BRepModel& model, int n, Rng& rng) {
  struct Tri {
    Point3 a, b, c;
    double area;
  };
  std::vector<Tri> tris;
  for (const auto& s : model.surfaces) {
    for (int u = 0; u + 1 < s.n; ++u)
      for (int v = 0; v + 1 < s.n; ++v) {
        const Point3& p00 = s.at(u, v);
        const Point3& p10 = s.at(u + 1, v);
        const Point3& p11 = s.at(u + 1, v + 1);
        const Point3& p01 = s.at(u, v + 1);
        Tri t1{p00, p10, p11, 0.5 * norm(cross(p10 - p00, p11 - p00))};
        Tri t2{p00, p11, p01, 0.5 * norm(cross(p11 - p00, p01 - p00))};
        tris.push_back(t1);
        tris.push_back(t2);
      }
  }
  std::vector<double> cum(tris.size());
  double total = 0.0;
  for (size_t i = 0; i < tris.size(); ++i) {
    total += tris[i].area;
    cum[i] = total;
  }
  if (tris.empty() || total <= 0.0) throw std::invalid_argument("sample_points: no surface area");

  PointSample out;
  out.points.reserve(n);
  out.normals.reserve(n);
  for (int i = 0; i < n; ++i) {
    double r = rng.uniform() * total;
    size_t k = std::lower_bound(cum.begin(), cum.end(), r) - cum.begin();
    if (k >= tris.size()) k = tris.size() - 1;
    const Tri& t = tris[k];
    double u = rng.uniform(), v = rng.uniform();
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    out.points.push_back(t.a + (t.b - t.a) * u + (t.c - t.a) * v);
    out.normals.push_back(normalized(cross(t.b - t.a, t.c - t.a)));
  }
  return out;
}

// --- serialization -------------------------------------------------------------

using json = nlohmann::ordered_json;

std::string to_json(const BRepModel& model) {
  json j;
  j["surfaces"] = json::array();
  for (const auto& s : model.surfaces) {
    json js;
    json grid = json::array();
    for (const auto& p : s.grid) grid.push_back({p.x, p.y, p.z});
    js["grid"] = std::move(grid);
    js["n"] = s.n;
    j["surfaces"].push_back(std::move(js));
  }
  j["edges"] = json::array();
  for (const auto& e : model.edges) {
    json je;
    json pts = json::array();
    for (const auto& p : e.points) pts.push_back({p.x, p.y, p.z});
    je["points"] = std::move(pts);
    j["edges"].push_back(std::move(je));
  }
  j["adjacency"] = json::array();
  for (const auto& row : model.adjacency) {
    json jr = json::array();
    for (uint8_t v : row) jr.push_back(int(v));
    j["adjacency"].push_back(std::move(jr));
  }
  return j.dump();
}

BRepModel from_json(const std::string& text) {
  json j = json::parse(text);
  BRepModel m;
  for (const auto& js : j.at("surfaces")) {
    SurfacePatch s;
    s.n = js.at("n").get<int>();
    for (const auto& jp : js.at("grid"))
      s.grid.push_back({jp.at(0).get<double>(), jp.at(1).get<double>(), jp.at(2).get<double>()});
    if (int(s.grid.size()) != s.n * s.n) throw std::runtime_error("model json: grid size mismatch");
    m.surfaces.push_back(std::move(s));
  }
  for (const auto& je : j.at("edges")) {
    EdgeCurve e;
    for (const auto& jp : je.at("points"))
      e.points.push_back({jp.at(0).get<double>(), jp.at(1).get<double>(), jp.at(2).get<double>()});
    if (e.points.size() < 2) throw std::runtime_error("model json: edge with < 2 points");
    m.edges.push_back(std::move(e));
  }
  for (const auto& jr : j.at("adjacency")) {
    std::vector<uint8_t> row;
    for (const auto& v : jr) row.push_back(uint8_t(v.get<int>() != 0));
    m.adjacency.push_back(std::move(row));
  }
  return m;
}

void save_json(const BRepModel& model, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << to_json(model);
}

BRepModel load_json(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return from_json(ss.str());
}

std::string to_obj(const BRepModel& model) {
  std::string out;
  char buf[128];
  int base = 1;
  for (const auto& s : model.surfaces) {
    for (const auto& p : s.grid) {
      std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", p.x, p.y, p.z);
      out += buf;
    }
    for (int u = 0; u + 1 < s.n; ++u)
      for (int v = 0; v + 1 < s.n; ++v) {
        int i00 = base + u * s.n + v;
        int i10 = base + (u + 1) * s.n + v;
        int i11 = base + (u + 1) * s.n + v + 1;
        int i01 = base + u * s.n + v + 1;
        std::snprintf(buf, sizeof(buf), "f %d %d %d\nf %d %d %d\n", i00, i10, i11, i00, i11, i01);
        out += buf;
      }
    base += s.n * s.n;
  }
  return out;
}

void save_obj(const BRepModel& model, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << to_obj(model);
}

}  // namespace cmt
