#include "cmt/dataset.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cmt/image.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace cmt {

void ensure_dir(const std::string& path) { fs::create_directories(path); }

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

namespace {

std::string id_name(int id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", id);
  return buf;
}

std::string hash_hex(uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

ShapeFamily family_from_name(const std::string& s) {
  if (s == "box") return ShapeFamily::Box;
  if (s == "lblock") return ShapeFamily::LBlock;
  if (s == "cylinder") return ShapeFamily::Cylinder;
  throw std::runtime_error("unknown family '" + s + "'");
}

}  // namespace

std::string Dataset::model_path(int id) const { return dir + "/models/" + id_name(id) + ".json"; }
std::string Dataset::image_path(int id) const { return dir + "/images/" + id_name(id) + ".png"; }

BRepModel Dataset::load_model(int id) const { return load_json(model_path(id)); }

PointSample Dataset::load_points(int id) const {
  return load_pointcloud(dir + "/points/" + id_name(id) + ".json");
}

Dataset Dataset::open(const std::string& d) {
  Dataset ds;
  ds.dir = d;
  json j = json::parse(read_text_file(d + "/manifest.json"));
  for (const auto& ji : j.at("items")) {
    DatasetItem it;
    it.id = ji.at("id").get<int>();
    it.family = family_from_name(ji.at("family").get<std::string>());
    it.caption = ji.at("caption").get<std::string>();
    it.hash = std::stoull(ji.at("hash").get<std::string>(), nullptr, 16);
    it.n_e = ji.at("n_e").get<int>();
    it.n_s = ji.at("n_s").get<int>();
    ds.items.push_back(std::move(it));
  }
  return ds;
}

Dataset synth_dataset(const RunConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  ensure_dir(out_dir + "/models");
  ensure_dir(out_dir + "/points");
  ensure_dir(out_dir + "/images");

  Dataset ds;
  ds.dir = out_dir;
  Rng root(cfg.synth_seed);

  json items = json::array();
  for (int id = 0; id < cfg.synth_count; ++id) {
    Rng rng = root.fork(uint64_t(id));
    ShapeSpec spec = random_spec(rng);
    spec.seed = cfg.synth_seed;
    BRepModel model = synth_generate(spec, cfg.grid_n, cfg.edge_m);
    std::string caption = caption_for(spec, rng);
    PointSample pc = sample_points(model, cfg.pc_points, rng);
    Image img = render_model(model, cfg.image_size);

    save_json(model, ds.dir + "/models/" + id_name(id) + ".json");
    save_pointcloud(pc, ds.dir + "/points/" + id_name(id) + ".json");
    save_png(img, ds.dir + "/images/" + id_name(id) + ".png");

    DatasetItem it;
    it.id = id;
    it.family = spec.family;
    it.caption = caption;
    it.hash = quantize_hash(model, cfg.hash_bits);
    it.n_e = model.num_edges();
    it.n_s = model.num_surfaces();
    ds.items.push_back(it);

    json ji;
    ji["id"] = id;
    ji["family"] = family_name(it.family);
    ji["caption"] = caption;
    ji["hash"] = hash_hex(it.hash);
    ji["n_e"] = it.n_e;
    ji["n_s"] = it.n_s;
    items.push_back(std::move(ji));
  }

  json manifest;
  manifest["version"] = 1;
  manifest["count"] = cfg.synth_count;
  manifest["seed"] = cfg.synth_seed;
  manifest["grid_n"] = cfg.grid_n;
  manifest["edge_m"] = cfg.edge_m;
  manifest["items"] = std::move(items);
  write_text_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");
  write_text_file(out_dir + "/config.toml", cfg.to_toml());
  return ds;
}

PointSample load_pointcloud(const std::string& path) {
  PointSample pc;
  auto push_row = [&](double x, double y, double z, double nx, double ny, double nz) {
    pc.points.push_back({x, y, z});
    pc.normals.push_back({nx, ny, nz});
  };
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".xyz") {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    double x, y, z, nx, ny, nz;
    while (f >> x >> y >> z >> nx >> ny >> nz) push_row(x, y, z, nx, ny, nz);
  } else {
    json j = json::parse(read_text_file(path));
    for (const auto& row : j) {
      if (row.size() != 6) throw std::runtime_error(path + ": expected rows of [x,y,z,nx,ny,nz]");
      push_row(row[0].get<double>(), row[1].get<double>(), row[2].get<double>(),
               row[3].get<double>(), row[4].get<double>(), row[5].get<double>());
    }
  }
  if (pc.points.empty()) throw std::runtime_error(path + ": empty point cloud");
  return pc;
}

void save_pointcloud(const PointSample& pc, const std::string& path) {
  json j = json::array();
  for (size_t i = 0; i < pc.points.size(); ++i) {
    const auto& p = pc.points[i];
    const auto& n = pc.normals[i];
    j.push_back({p.x, p.y, p.z, n.x, n.y, n.z});
  }
  write_text_file(path, j.dump());
}

// --- token-set cache -------------------------------------------------------------

void TokenSet::save(const std::string& dir) const {
  ensure_dir(dir);
  std::ofstream bin(dir + "/tokens.bin", std::ios::binary);
  std::ofstream adj(dir + "/adjacency.bin", std::ios::binary);
  if (!bin || !adj) throw std::runtime_error("cannot write token set to " + dir);

  json jentries = json::array();
  for (const auto& e : entries) {
    bin.write(reinterpret_cast<const char*>(e.edges.data()), std::streamsize(e.edges.size() * 4));
    bin.write(reinterpret_cast<const char*>(e.surfaces.data()),
              std::streamsize(e.surfaces.size() * 4));
    adj.write(reinterpret_cast<const char*>(e.adjacency.data()),
              std::streamsize(e.adjacency.size()));
    json je;
    je["n_e"] = e.n_e;
    je["n_s"] = e.n_s;
    jentries.push_back(std::move(je));
  }
  json m;
  m["version"] = 1;
  m["order_tag"] = order_tag;
  m["d_e"] = d_e;
  m["d_s"] = d_s;
  m["max_edges"] = max_edges;
  m["max_surfaces"] = max_surfaces;
  m["entries"] = std::move(jentries);
  write_text_file(dir + "/tokens.json", m.dump(2) + "\n");
}

TokenSet TokenSet::load(const std::string& dir) {
  TokenSet ts;
  json m = json::parse(read_text_file(dir + "/tokens.json"));
  ts.order_tag = m.at("order_tag").get<std::string>();
  ts.d_e = m.at("d_e").get<int>();
  ts.d_s = m.at("d_s").get<int>();
  ts.max_edges = m.at("max_edges").get<int>();
  ts.max_surfaces = m.at("max_surfaces").get<int>();

  std::ifstream bin(dir + "/tokens.bin", std::ios::binary);
  std::ifstream adj(dir + "/adjacency.bin", std::ios::binary);
  if (!bin || !adj) throw std::runtime_error("cannot read token set from " + dir);
  for (const auto& je : m.at("entries")) {
    TokenSetEntry e;
    e.n_e = je.at("n_e").get<int>();
    e.n_s = je.at("n_s").get<int>();
    e.edges.resize(size_t(e.n_e) * ts.edge_dim());
    e.surfaces.resize(size_t(e.n_s) * ts.surf_dim());
    e.adjacency.resize(size_t(e.n_e) * e.n_s);
    bin.read(reinterpret_cast<char*>(e.edges.data()), std::streamsize(e.edges.size() * 4));
    bin.read(reinterpret_cast<char*>(e.surfaces.data()), std::streamsize(e.surfaces.size() * 4));
    adj.read(reinterpret_cast<char*>(e.adjacency.data()), std::streamsize(e.adjacency.size()));
    if (!bin || !adj) throw std::runtime_error("token set truncated in " + dir);
    ts.entries.push_back(std::move(e));
  }
  return ts;
}

}  // namespace cmt
