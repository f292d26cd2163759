#include "cmt/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace cmt {

void save_png(const Image& img, const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("png write failed: " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y)
    png_write_row(png, const_cast<png_bytep>(img.pixel(0, y)));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

Image load_png(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw std::runtime_error("cannot read " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw std::runtime_error("png read failed: " + path);
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  // normalize whatever comes in to 8-bit RGBA
  png_set_expand(png);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  png_byte color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  png_set_add_alpha(png, 0xFF, PNG_FILLER_AFTER);
  png_read_update_info(png, info);

  Image img;
  img.width = int(png_get_image_width(png, info));
  img.height = int(png_get_image_height(png, info));
  img.rgba.resize(size_t(img.width) * img.height * 4);
  for (int y = 0; y < img.height; ++y) png_read_row(png, img.pixel(0, y), nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return img;
}

Image render_model(const BRepModel& model, int size) {
  Image img;
  img.width = img.height = size;
  img.rgba.assign(size_t(size) * size * 4, 0);

  // fixed isometric-ish camera; right/up/forward orthonormal frame
  Point3 fwd = normalized({-1.0, -0.8, -0.6});
  Point3 right = normalized(cross(Point3{0, 0, 1}, fwd));
  Point3 up = cross(fwd, right);
  Point3 light = normalized({0.4, 0.3, 0.85});

  auto project = [&](const Point3& p) -> Point3 {
    // model coordinates are in [-1,1]; map to pixel space with a small margin
    double sx = (dot(p, right) / 1.9 + 0.5) * (size - 1);
    double sy = (0.5 - dot(p, up) / 1.9) * (size - 1);
    double sz = dot(p, fwd);
    return {sx, sy, sz};
  };

  std::vector<double> zbuf(size_t(size) * size, -std::numeric_limits<double>::infinity());

  auto raster_tri = [&](const Point3& a, const Point3& b, const Point3& c) {
    Point3 n = cross(b - a, c - a);
    double area2 = norm(n);
    if (area2 <= 0) return;
    n = n * (1.0 / area2);
    double shade = 0.35 + 0.65 * std::abs(dot(n, light));
    uint8_t g = uint8_t(std::clamp(shade, 0.0, 1.0) * 255.0);

    Point3 pa = project(a), pb = project(b), pc = project(c);
    int x0 = std::max(0, int(std::floor(std::min({pa.x, pb.x, pc.x}))));
    int x1 = std::min(size - 1, int(std::ceil(std::max({pa.x, pb.x, pc.x}))));
    int y0 = std::max(0, int(std::floor(std::min({pa.y, pb.y, pc.y}))));
    int y1 = std::min(size - 1, int(std::ceil(std::max({pa.y, pb.y, pc.y}))));
    double det = (pb.x - pa.x) * (pc.y - pa.y) - (pc.x - pa.x) * (pb.y - pa.y);
    if (std::abs(det) < 1e-12) return;
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        double wx = x + 0.5 - pa.x, wy = y + 0.5 - pa.y;
        double l1 = (wx * (pc.y - pa.y) - wy * (pc.x - pa.x)) / det;
        double l2 = (wy * (pb.x - pa.x) - wx * (pb.y - pa.y)) / det;
        double l0 = 1.0 - l1 - l2;
        if (l0 < 0 || l1 < 0 || l2 < 0) continue;
        double z = l0 * pa.z + l1 * pb.z + l2 * pc.z;
        size_t idx = size_t(y) * size + x;
        if (z <= zbuf[idx]) continue;
        zbuf[idx] = z;
        uint8_t* px = img.pixel(x, y);
        px[0] = px[1] = px[2] = g;
        px[3] = 255;
      }
  };

  for (const auto& s : model.surfaces)
    for (int u = 0; u + 1 < s.n; ++u)
      for (int v = 0; v + 1 < s.n; ++v) {
        raster_tri(s.at(u, v), s.at(u + 1, v), s.at(u + 1, v + 1));
        raster_tri(s.at(u, v), s.at(u + 1, v + 1), s.at(u, v + 1));
      }
  return img;
}

}  // namespace cmt
