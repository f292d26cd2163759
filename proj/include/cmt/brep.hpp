// B-Rep data model: surfaces as point grids, edges as polylines, and a binary
// edge-surface adjacency matrix. Includes normalization, validity checking,
// the quantized dedup hash, point sampling and JSON/OBJ serialization.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cmt/geom.hpp"
#include "cmt/rng.hpp"

namespace cmt {

// n x n grid of points, row-major (u outer, v inner).
struct SurfacePatch {
  int n = 0;
  std::vector<Point3> grid;                  // n*n
  std::optional<std::vector<Point3>> normals;  // n*n unit vectors when present

  const Point3& at(int u, int v) const { return grid[u * n + v]; }
  Point3& at(int u, int v) { return grid[u * n + v]; }
  BBox bbox() const;
};

// Ordered polyline; closed edges have points.front() == points.back() (within
// the vertex tolerance).
struct EdgeCurve {
  std::vector<Point3> points;

  const Point3& start() const { return points.front(); }
  const Point3& end() const { return points.back(); }
  bool closed(double eps) const { return dist(start(), end()) <= eps; }
  BBox bbox() const;
};

struct BRepModel {
  std::vector<SurfacePatch> surfaces;
  std::vector<EdgeCurve> edges;
  // adjacency[e][s] == 1 iff edge e bounds surface s (N_e rows, N_s cols).
  std::vector<std::vector<uint8_t>> adjacency;

  int num_surfaces() const { return int(surfaces.size()); }
  int num_edges() const { return int(edges.size()); }
  bool empty() const { return surfaces.empty() && edges.empty(); }
  BBox bbox() const;
};

constexpr double kVertexEps = 1e-3;  // default vertex tolerance, normalized units

// --- normalization ---------------------------------------------------------

struct NormalizeResult {
  BRepModel model;
  double scale = 1.0;   // normalized = original * scale + offset
  Point3 offset;
};

// Maps the longest axis of the model's bounding box to [-1,1], centered,
// preserving aspect ratios. Throws on an empty or fully degenerate model.
NormalizeResult normalize(const BRepModel& model);

BRepModel denormalize(const BRepModel& model, double scale, const Point3& offset);

// --- validity ---------------------------------------------------------------

enum class FailureCode { EDGE_INCIDENCE, ORPHAN_SURFACE, ENDPOINT_MISMATCH, OPEN_LOOP, EMPTY };

const char* failure_code_name(FailureCode c);

struct ValidityReport {
  bool valid = true;
  std::vector<std::pair<FailureCode, std::string>> failures;

  void fail(FailureCode code, std::string detail) {
    valid = false;
    failures.emplace_back(code, std::move(detail));
  }
  bool has(FailureCode code) const {
    for (auto& f : failures)
      if (f.first == code) return true;
    return false;
  }
};

// Clusters the edge endpoints at tolerance eps (single linkage) and returns
// one vertex id per (edge, endpoint in {start,end}) pair, plus centroids.
struct VertexClustering {
  std::vector<int> start_vertex;  // per edge
  std::vector<int> end_vertex;    // per edge
  std::vector<Point3> vertices;   // cluster centroids
};
VertexClustering cluster_vertices(const BRepModel& model, double eps);

// Topological/geometric consistency checks: every edge bounds exactly two
// surfaces, every surface has at least one edge, and each surface's incident
// edges close into boundary loops through the clustered vertices.
ValidityReport validate_brep(const BRepModel& model, double eps = kVertexEps);

// V - E + F over the clustered vertex set.
int euler_characteristic(const BRepModel& model, double eps = kVertexEps);

// --- dedup hash --------------------------------------------------------------

// Deterministic content hash: surface grid points quantized to 2^bits uniform
// bins over [-1,1] per coordinate, sorted, then FNV-1a hashed. Equal digests
// are treated as duplicate models. pts_per_surface == 0 uses every grid point;
// otherwise a deterministic stride subsample of at most that many points.
uint64_t quantize_hash(const BRepModel& model, int bits = 6, int pts_per_surface = 0);

// Quantizes every coordinate to the center of its 2^bits bin over [-1,1].
BRepModel quantize_coords(const BRepModel& model, int bits);

// --- point sampling -----------------------------------------------------------

struct PointSample {
  std::vector<Point3> points;
  std::vector<Point3> normals;
  size_t size() const { return points.size(); }
};

// Area-weighted sample of N points over the model's surface grids (two
// triangles per quad cell); normals come from the containing triangle.
PointSample sample_points(const BRepModel& model, int n, Rng& rng);

// --- serialization -------------------------------------------------------------

std::string to_json(const BRepModel& model);
BRepModel from_json(const std::string& text);
void save_json(const BRepModel& model, const std::string& path);
BRepModel load_json(const std::string& path);

// Grid triangulation, two triangles per quad cell.
std::string to_obj(const BRepModel& model);
void save_obj(const BRepModel& model, const std::string& path);

}  // namespace cmt
