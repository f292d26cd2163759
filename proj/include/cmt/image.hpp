// RGBA images, PNG I/O, and a small orthographic software rasterizer used to
// render proxy conditioning images of B-Rep models.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cmt/brep.hpp"

namespace cmt {

struct Image {
  int width = 0, height = 0;
  std::vector<uint8_t> rgba;  // row-major, 4 bytes per pixel

  uint8_t* pixel(int x, int y) { return rgba.data() + 4 * (size_t(y) * width + x); }
  const uint8_t* pixel(int x, int y) const { return rgba.data() + 4 * (size_t(y) * width + x); }
};

void save_png(const Image& img, const std::string& path);
Image load_png(const std::string& path);

// Orthographic render of the model's grid triangulation from a fixed
// isometric-style viewpoint, Lambert shaded, transparent background.
Image render_model(const BRepModel& model, int size = 32);

}  // namespace cmt
