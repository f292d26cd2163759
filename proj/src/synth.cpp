#include "cmt/synth.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cmt {

const char* family_name(ShapeFamily f) {
  switch (f) {
    case ShapeFamily::Box: return "box";
    case ShapeFamily::LBlock: return "lblock";
    case ShapeFamily::Cylinder: return "cylinder";
  }
  return "?";
}

void ShapeSpec::check() const {
  auto pos = [](double v) { return std::isfinite(v) && v > 0.0; };
  switch (family) {
    case ShapeFamily::Box:
      if (!pos(dx) || !pos(dy) || !pos(dz)) throw std::invalid_argument("box: dimensions must be > 0");
      break;
    case ShapeFamily::LBlock:
      if (!pos(dx) || !pos(dy) || !pos(dz)) throw std::invalid_argument("lblock: dimensions must be > 0");
      if (!(cut_x > 0 && cut_x < dx && cut_y > 0 && cut_y < dy))
        throw std::invalid_argument("lblock: cut must lie strictly inside the cross-section");
      break;
    case ShapeFamily::Cylinder:
      if (!pos(radius) || !pos(height)) throw std::invalid_argument("cylinder: dimensions must be > 0");
      break;
  }
}

ShapeSpec random_spec(Rng& rng) {
  ShapeSpec s;
  int f = rng.uniform_int(3);
  s.family = f == 0 ? ShapeFamily::Box : (f == 1 ? ShapeFamily::LBlock : ShapeFamily::Cylinder);
  switch (s.family) {
    case ShapeFamily::Box:
      s.dx = rng.uniform(0.8, 2.0);
      s.dy = rng.uniform(0.8, 2.0);
      s.dz = rng.uniform(0.8, 2.0);
      break;
    case ShapeFamily::LBlock:
      s.dx = rng.uniform(1.2, 2.0);
      s.dy = rng.uniform(1.2, 2.0);
      s.dz = rng.uniform(0.8, 2.0);
      s.cut_x = s.dx * rng.uniform(0.35, 0.65);
      s.cut_y = s.dy * rng.uniform(0.35, 0.65);
      break;
    case ShapeFamily::Cylinder:
      s.radius = rng.uniform(0.4, 0.8);
      s.height = rng.uniform(0.8, 2.0);
      break;
  }
  return s;
}

int face_count(ShapeFamily f) {
  switch (f) {
    case ShapeFamily::Box: return 6;
    case ShapeFamily::LBlock: return 8;
    case ShapeFamily::Cylinder: return 3;
  }
  return 0;
}

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

SurfacePatch make_patch(int n) {
  SurfacePatch p;
  p.n = n;
  p.grid.resize(size_t(n) * n);
  p.normals = std::vector<Point3>(size_t(n) * n);
  return p;
}

// Planar quad patch: corner + u*edge_u + v*edge_v, constant normal
// cross(edge_u, edge_v). u is the outer grid index.
SurfacePatch quad_patch(const Point3& corner, const Point3& eu, const Point3& ev, int n) {
  SurfacePatch p = make_patch(n);
  Point3 nrm = normalized(cross(eu, ev));
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) {
      double fu = double(u) / (n - 1), fv = double(v) / (n - 1);
      p.at(u, v) = corner + eu * fu + ev * fv;
      (*p.normals)[u * p.n + v] = nrm;
    }
  return p;
}

EdgeCurve line_edge(const Point3& a, const Point3& b, int m) {
  EdgeCurve e;
  e.points.resize(m);
  for (int i = 0; i < m; ++i) {
    double t = double(i) / (m - 1);
    e.points[i] = a + (b - a) * t;
  }
  return e;
}

EdgeCurve circle_edge(double r, double z, int m) {
  EdgeCurve e;
  e.points.resize(m);
  for (int i = 0; i < m; ++i) {
    double t = kTau * double(i) / (m - 1);
    e.points[i] = {r * std::cos(t), r * std::sin(t), z};
  }
  e.points[m - 1] = e.points[0];  // closed exactly
  return e;
}

// L-shaped cross-section polygon, counter-clockwise: the dx*dy rectangle
// minus the +x/+y corner notch.
std::array<Point3, 6> lblock_polygon(const ShapeSpec& s) {
  return {Point3{0, 0, 0},      Point3{s.dx, 0, 0},    Point3{s.dx, s.cut_y, 0},
          Point3{s.cut_x, s.cut_y, 0}, Point3{s.cut_x, s.dy, 0}, Point3{0, s.dy, 0}};
}

// Snaps the notch cut onto grid lines so the caps can be exact regular grids;
// the notch interior then collapses to zero-area cells instead of folded ones.
ShapeSpec snap_lblock_cuts(const ShapeSpec& s, int n) {
  ShapeSpec out = s;
  auto snap = [&](double cut, double d) {
    int k = int(std::lround(cut / d * (n - 1)));
    k = std::clamp(k, 2, n - 3);
    return double(k) / (n - 1) * d;
  };
  out.cut_x = snap(s.cut_x, s.dx);
  out.cut_y = snap(s.cut_y, s.dy);
  return out;
}

// Cap of the L block: a regular grid over the bounding rectangle with points
// strictly inside the notch collapsed onto the inner corner. Cells in the
// notch are degenerate (zero area); everything else covers the face exactly.
// flip_u reverses the row direction so the bottom cap's triangles face -z.
SurfacePatch lblock_cap(const ShapeSpec& s, double z, bool flip_u, int n) {
  SurfacePatch p = make_patch(n);
  Point3 nrm{0, 0, flip_u ? -1.0 : 1.0};
  const int kx = int(std::lround(s.cut_x / s.dx * (n - 1)));
  const int ky = int(std::lround(s.cut_y / s.dy * (n - 1)));
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) {
      int ix = flip_u ? n - 1 - u : u;
      int iy = v;
      if (ix > kx && iy > ky) {  // strictly inside the notch
        ix = kx;
        iy = ky;
      }
      p.at(u, v) = {double(ix) / (n - 1) * s.dx, double(iy) / (n - 1) * s.dy, z};
      (*p.normals)[u * p.n + v] = nrm;
    }
  return p;
}

SurfacePatch disk_cap(double r, double z, bool up, int n) {
  SurfacePatch p = make_patch(n);
  Point3 nrm{0, 0, up ? 1.0 : -1.0};
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) {
      double rho = r * double(u) / (n - 1);
      double theta = kTau * double(v) / (n - 1);
      if (!up) theta = -theta;  // reversed so triangles face -z
      p.at(u, v) = {rho * std::cos(theta), rho * std::sin(theta), z};
      (*p.normals)[u * p.n + v] = nrm;
    }
  return p;
}

SurfacePatch cylinder_lateral(double r, double h, int n) {
  SurfacePatch p = make_patch(n);
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) {
      double theta = kTau * double(u) / (n - 1);
      double z = -h / 2 + h * double(v) / (n - 1);
      p.at(u, v) = {r * std::cos(theta), r * std::sin(theta), z};
      (*p.normals)[u * p.n + v] = {std::cos(theta), std::sin(theta), 0};
    }
  return p;
}

BRepModel build_box(const ShapeSpec& s, int n, int m) {
  double hx = s.dx / 2, hy = s.dy / 2, hz = s.dz / 2;
  Point3 X{s.dx, 0, 0}, Y{0, s.dy, 0}, Z{0, 0, s.dz};
  BRepModel mdl;
  // faces ordered x-, x+, y-, y+, z-, z+; orientations chosen outward
  mdl.surfaces.push_back(quad_patch({-hx, -hy, -hz}, Z, Y, n));                 // x-
  mdl.surfaces.push_back(quad_patch({hx, -hy, -hz}, Y, Z, n));                  // x+
  mdl.surfaces.push_back(quad_patch({-hx, -hy, -hz}, X, Z, n));                 // y-
  mdl.surfaces.push_back(quad_patch({-hx, hy, -hz}, Z, X, n));                  // y+
  mdl.surfaces.push_back(quad_patch({-hx, -hy, -hz}, Y, X, n));                 // z-
  mdl.surfaces.push_back(quad_patch({-hx, -hy, hz}, X, Y, n));                  // z+

  auto corner = [&](int i, int j, int k) -> Point3 {
    return {i ? hx : -hx, j ? hy : -hy, k ? hz : -hz};
  };
  // 4 edges along each axis; each bounds the two faces it does not vary over
  struct E {
    Point3 a, b;
    int f0, f1;
  };
  std::vector<E> es;
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k) es.push_back({corner(0, j, k), corner(1, j, k), 2 + j, 4 + k});
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) es.push_back({corner(i, 0, k), corner(i, 1, k), 0 + i, 4 + k});
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) es.push_back({corner(i, j, 0), corner(i, j, 1), 0 + i, 2 + j});

  for (const auto& e : es) {
    mdl.edges.push_back(line_edge(e.a, e.b, m));
    std::vector<uint8_t> row(6, 0);
    row[e.f0] = 1;
    row[e.f1] = 1;
    mdl.adjacency.push_back(row);
  }
  return mdl;
}

BRepModel build_lblock(const ShapeSpec& spec, int n, int m) {
  ShapeSpec s = snap_lblock_cuts(spec, n);
  auto poly = lblock_polygon(s);
  BRepModel mdl;
  // faces 0..5: side walls for polygon segments i -> i+1; 6: bottom; 7: top
  for (int i = 0; i < 6; ++i) {
    Point3 a = poly[i], b = poly[(i + 1) % 6];
    mdl.surfaces.push_back(quad_patch(a, b - a, Point3{0, 0, s.dz}, n));
  }
  mdl.surfaces.push_back(lblock_cap(s, 0, true, n));
  mdl.surfaces.push_back(lblock_cap(s, s.dz, false, n));

  auto adj_row = [&](int f0, int f1) {
    std::vector<uint8_t> row(8, 0);
    row[f0] = 1;
    row[f1] = 1;
    return row;
  };
  for (int i = 0; i < 6; ++i) {  // bottom rim
    Point3 a = poly[i], b = poly[(i + 1) % 6];
    mdl.edges.push_back(line_edge(a, b, m));
    mdl.adjacency.push_back(adj_row(i, 6));
  }
  for (int i = 0; i < 6; ++i) {  // top rim
    Point3 a = poly[i] + Point3{0, 0, s.dz}, b = poly[(i + 1) % 6] + Point3{0, 0, s.dz};
    mdl.edges.push_back(line_edge(a, b, m));
    mdl.adjacency.push_back(adj_row(i, 7));
  }
  for (int i = 0; i < 6; ++i) {  // verticals, between wall i-1 and wall i
    mdl.edges.push_back(line_edge(poly[i], poly[i] + Point3{0, 0, s.dz}, m));
    mdl.adjacency.push_back(adj_row((i + 5) % 6, i));
  }
  return mdl;
}

BRepModel build_cylinder(const ShapeSpec& s, int n, int m) {
  BRepModel mdl;
  mdl.surfaces.push_back(disk_cap(s.radius, -s.height / 2, false, n));  // bottom cap
  mdl.surfaces.push_back(disk_cap(s.radius, s.height / 2, true, n));    // top cap
  mdl.surfaces.push_back(cylinder_lateral(s.radius, s.height, n));
  mdl.edges.push_back(circle_edge(s.radius, -s.height / 2, m));
  mdl.edges.push_back(circle_edge(s.radius, s.height / 2, m));
  mdl.adjacency.push_back({1, 0, 1});
  mdl.adjacency.push_back({0, 1, 1});
  return mdl;
}

BRepModel build_raw(const ShapeSpec& spec, int n, int m) {
  spec.check();
  switch (spec.family) {
    case ShapeFamily::Box: return build_box(spec, n, m);
    case ShapeFamily::LBlock: return build_lblock(spec, n, m);
    case ShapeFamily::Cylinder: return build_cylinder(spec, n, m);
  }
  throw std::logic_error("unreachable");
}

}  // namespace

SurfacePatch sample_surface(const ShapeSpec& spec, int face, int n) {
  if (n < 2) throw std::invalid_argument("sample_surface: n must be >= 2");
  spec.check();
  if (face < 0 || face >= face_count(spec.family))
    throw std::invalid_argument("sample_surface: face index out of range");
  switch (spec.family) {
    case ShapeFamily::Box: return build_box(spec, n, 2).surfaces[face];
    case ShapeFamily::LBlock: return build_lblock(spec, n, 2).surfaces[face];
    case ShapeFamily::Cylinder: return build_cylinder(spec, n, 2).surfaces[face];
  }
  throw std::logic_error("unreachable");
}

BRepModel synth_generate(const ShapeSpec& spec, int grid_n, int edge_m) {
  if (grid_n < 2 || edge_m < 2) throw std::invalid_argument("synth_generate: grid/edge resolution must be >= 2");
  BRepModel raw = build_raw(spec, grid_n, edge_m);
  return normalize(raw).model;
}

std::string caption_for(const ShapeSpec& spec, Rng& rng) {
  std::string adj;
  switch (spec.family) {
    case ShapeFamily::Box: {
      double r = spec.dz / std::max(spec.dx, spec.dy);
      if (r >= 1.4)
        adj = "tall";
      else if (r <= 0.6)
        adj = "flat";
      else if (std::max(spec.dx, spec.dy) / std::min(spec.dx, spec.dy) >= 1.5)
        adj = "wide";
      break;
    }
    case ShapeFamily::LBlock: {
      double r = spec.dz / std::max(spec.dx, spec.dy);
      if (r >= 1.2)
        adj = "tall";
      else if (r <= 0.6)
        adj = "flat";
      break;
    }
    case ShapeFamily::Cylinder: {
      double r = spec.height / (2 * spec.radius);
      if (r >= 1.4)
        adj = "tall";
      else if (r <= 0.7)
        adj = "squat";
      else if (spec.radius >= 0.65)
        adj = "wide";
      break;
    }
  }
  std::string noun = spec.family == ShapeFamily::Box       ? "box"
                     : spec.family == ShapeFamily::LBlock  ? "l-shaped block"
                                                           : "cylinder";
  bool use_adj = !adj.empty() && rng.uniform() < 0.7;
  std::string rest = use_adj ? adj + " " + noun : noun;
  std::string article = (rest[0] == 'a' || rest[0] == 'e' || rest[0] == 'i' || rest[0] == 'o' ||
                         rest[0] == 'u' || rest[0] == 'l')
                            ? "an"
                            : "a";
  return article + " " + rest;
}

std::vector<std::string> caption_vocabulary() {
  return {"a",    "an",  "box",  "block", "cylinder", "l-shaped",
          "tall", "flat", "wide", "squat", "thin"};
}

}  // namespace cmt
