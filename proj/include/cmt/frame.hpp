// Local-frame mapping: every surface grid / edge polyline is encoded by the
// VAEs inside its own bounding box, affinely mapped to the unit cube per axis
// (degenerate axes map to 0), so latents capture shape and bounding boxes
// capture placement.
#pragma once

#include <vector>

#include "cmt/geom.hpp"

namespace cmt {

constexpr double kDegenerateAxisEps = 1e-9;

inline Point3 to_local(const Point3& p, const BBox& b) {
  auto map1 = [](double x, double lo, double hi) {
    double e = hi - lo;
    if (e <= kDegenerateAxisEps) return 0.0;
    return 2.0 * (x - lo) / e - 1.0;
  };
  return {map1(p.x, b.x1, b.x2), map1(p.y, b.y1, b.y2), map1(p.z, b.z1, b.z2)};
}

inline Point3 from_local(const Point3& q, const BBox& b) {
  auto unmap1 = [](double t, double lo, double hi) {
    double e = hi - lo;
    if (e <= kDegenerateAxisEps) return 0.5 * (lo + hi);
    return lo + (t + 1.0) * 0.5 * e;
  };
  return {unmap1(q.x, b.x1, b.x2), unmap1(q.y, b.y1, b.y2), unmap1(q.z, b.z1, b.z2)};
}

inline std::vector<double> to_local_flat(const std::vector<Point3>& pts, const BBox& b) {
  std::vector<double> out;
  out.reserve(pts.size() * 3);
  for (const auto& p : pts) {
    Point3 q = to_local(p, b);
    out.push_back(q.x);
    out.push_back(q.y);
    out.push_back(q.z);
  }
  return out;
}

inline std::vector<Point3> from_local_flat(const std::vector<double>& flat, const BBox& b) {
  std::vector<Point3> out(flat.size() / 3);
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = from_local({flat[3 * i], flat[3 * i + 1], flat[3 * i + 2]}, b);
  return out;
}

}  // namespace cmt
