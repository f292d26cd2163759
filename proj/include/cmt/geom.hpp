// Basic 3D geometry types shared across the library.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace cmt {

struct Point3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Point3 operator+(const Point3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Point3 operator-(const Point3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Point3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Point3& operator+=(const Point3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
};

inline double dot(const Point3& a, const Point3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Point3 cross(const Point3& a, const Point3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Point3& a) { return std::sqrt(dot(a, a)); }
inline double dist(const Point3& a, const Point3& b) { return norm(a - b); }
inline double dist_sq(const Point3& a, const Point3& b) {
  Point3 d = a - b;
  return dot(d, d);
}
inline Point3 normalized(const Point3& a) {
  double n = norm(a);
  return n > 0.0 ? a * (1.0 / n) : Point3{0, 0, 0};
}
inline bool finite(const Point3& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

// Axis-aligned box stored as (min corner, max corner).
struct BBox {
  double x1 = 0, y1 = 0, z1 = 0;
  double x2 = 0, y2 = 0, z2 = 0;

  static BBox empty() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {inf, inf, inf, -inf, -inf, -inf};
  }
  void expand(const Point3& p) {
    x1 = std::min(x1, p.x);
    y1 = std::min(y1, p.y);
    z1 = std::min(z1, p.z);
    x2 = std::max(x2, p.x);
    y2 = std::max(y2, p.y);
    z2 = std::max(z2, p.z);
  }
  void expand(const BBox& b) {
    x1 = std::min(x1, b.x1);
    y1 = std::min(y1, b.y1);
    z1 = std::min(z1, b.z1);
    x2 = std::max(x2, b.x2);
    y2 = std::max(y2, b.y2);
    z2 = std::max(z2, b.z2);
  }
  Point3 min_corner() const { return {x1, y1, z1}; }
  Point3 max_corner() const { return {x2, y2, z2}; }
  Point3 center() const { return {(x1 + x2) * 0.5, (y1 + y2) * 0.5, (z1 + z2) * 0.5}; }
  Point3 extent() const { return {x2 - x1, y2 - y1, z2 - z1}; }
  double max_extent() const {
    Point3 e = extent();
    return std::max({e.x, e.y, e.z});
  }
  bool valid() const {
    return x1 <= x2 && y1 <= y2 && z1 <= z2 && std::isfinite(x1) && std::isfinite(x2) &&
           std::isfinite(y1) && std::isfinite(y2) && std::isfinite(z1) && std::isfinite(z2);
  }
  bool contains(const Point3& p, double slack = 0.0) const {
    return p.x >= x1 - slack && p.x <= x2 + slack && p.y >= y1 - slack && p.y <= y2 + slack &&
           p.z >= z1 - slack && p.z <= z2 + slack;
  }
};

}  // namespace cmt
