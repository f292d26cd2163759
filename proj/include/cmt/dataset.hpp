// On-disk dataset produced by `cmt synth` (models + captions + point clouds +
// rendered proxy images) and the binary token-set cache built from it.
#pragma once

#include <string>
#include <vector>

#include "cmt/brep.hpp"
#include "cmt/config.hpp"
#include "cmt/synth.hpp"

namespace cmt {

struct DatasetItem {
  int id = 0;
  ShapeFamily family = ShapeFamily::Box;
  std::string caption;
  uint64_t hash = 0;
  int n_e = 0, n_s = 0;
};

struct Dataset {
  std::string dir;
  std::vector<DatasetItem> items;

  static Dataset open(const std::string& dir);
  BRepModel load_model(int id) const;
  PointSample load_points(int id) const;
  std::string model_path(int id) const;
  std::string image_path(int id) const;
};

// Deterministic given cfg.synth_seed; writes models/, points/, images/,
// manifest.json and a frozen copy of the resolved config.
Dataset synth_dataset(const RunConfig& cfg, const std::string& out_dir);

// Point-cloud files: JSON array of [x,y,z,nx,ny,nz] rows, or whitespace .xyz.
PointSample load_pointcloud(const std::string& path);
void save_pointcloud(const PointSample& pc, const std::string& path);

// --- token-set cache -------------------------------------------------------------
// Little-endian float32 token arrays with a JSON manifest carrying shapes and
// the ordering version tag.

struct TokenSetEntry {
  std::vector<float> edges;      // n_e x (d_e + 12), row-major
  std::vector<float> surfaces;   // n_s x (6 + d_s)
  std::vector<uint8_t> adjacency;  // n_e x n_s
  int n_e = 0, n_s = 0;
};

struct TokenSet {
  int d_e = 0, d_s = 0;
  int max_edges = 0, max_surfaces = 0;
  std::string order_tag = "bbox-lex-v1";
  std::vector<TokenSetEntry> entries;

  int edge_dim() const { return d_e + 12; }
  int surf_dim() const { return 6 + d_s; }

  void save(const std::string& dir) const;
  static TokenSet load(const std::string& dir);
};

void ensure_dir(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace cmt
