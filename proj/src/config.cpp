#include "cmt/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cmt/kernels.hpp"

namespace cmt {

namespace {

struct TomlValue {
  std::string raw;
  int line = 0;
};

// key -> value for the "section.key" flattened form
using TomlMap = std::map<std::string, TomlValue>;

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

TomlMap parse_toml(const std::string& text, const std::string& origin) {
  TomlMap out;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    // strip comments outside strings
    bool in_str = false;
    for (size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_str = !in_str;
      if (line[i] == '#' && !in_str) {
        line = line.substr(0, i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail("empty section name");
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty()) fail("empty key");
    if (val.empty()) fail("empty value for key '" + key + "'");
    std::string full = section.empty() ? key : section + "." + key;
    if (out.count(full)) fail("duplicate key '" + full + "'");
    out[full] = {val, lineno};
  }
  return out;
}

struct TomlReader {
  TomlMap map;
  std::string origin;
  std::map<std::string, bool> used;

  bool has(const std::string& k) const { return map.count(k) > 0; }

  void get(const std::string& k, std::string& out) {
    auto it = map.find(k);
    if (it == map.end()) return;
    used[k] = true;
    const std::string& r = it->second.raw;
    if (r.size() < 2 || r.front() != '"' || r.back() != '"')
      fail(it->second.line, "expected quoted string for '" + k + "'");
    out = r.substr(1, r.size() - 2);
  }
  void get(const std::string& k, double& out) {
    auto it = map.find(k);
    if (it == map.end()) return;
    used[k] = true;
    try {
      size_t pos = 0;
      out = std::stod(it->second.raw, &pos);
      if (pos != it->second.raw.size()) throw std::invalid_argument("");
    } catch (...) {
      fail(it->second.line, "expected number for '" + k + "'");
    }
  }
  void get(const std::string& k, int& out) {
    auto it = map.find(k);
    if (it == map.end()) return;
    used[k] = true;
    try {
      size_t pos = 0;
      long v = std::stol(it->second.raw, &pos);
      if (pos != it->second.raw.size()) throw std::invalid_argument("");
      out = int(v);
    } catch (...) {
      fail(it->second.line, "expected integer for '" + k + "'");
    }
  }
  void get(const std::string& k, uint64_t& out) {
    auto it = map.find(k);
    if (it == map.end()) return;
    used[k] = true;
    try {
      size_t pos = 0;
      unsigned long long v = std::stoull(it->second.raw, &pos);
      if (pos != it->second.raw.size()) throw std::invalid_argument("");
      out = uint64_t(v);
    } catch (...) {
      fail(it->second.line, "expected integer for '" + k + "'");
    }
  }
  void fail(int line, const std::string& msg) const {
    throw std::runtime_error(origin + ":" + std::to_string(line) + ": " + msg);
  }
  void check_all_used() const {
    for (const auto& [k, v] : map)
      if (!used.count(k)) fail(v.line, "unknown key '" + k + "'");
  }
};

}  // namespace

void RunConfig::validate() const {
  auto req = [](bool ok, const std::string& msg) {
    if (!ok) throw std::runtime_error("config: " + msg);
  };
  req(profile == "desk" || profile == "deepcad" || profile == "abc",
      "profile must be desk, deepcad or abc");
  req(max_edges >= max_surfaces, "max edge length must be >= max surface length");
  req(max_edges > 0 && max_surfaces > 0, "sequence lengths must be > 0");
  req(grid_n >= 2 && edge_m >= 2, "grid_n and edge_m must be >= 2");
  req(eps > 0 && assemble_eps > 0, "tolerances must be > 0");
  req(d_s > 0 && d_e > 0 && vae_hidden > 0, "vae dims must be > 0");
  req(width > 0 && depth > 0 && heads > 0, "transformer dims must be > 0");
  req(width % heads == 0, "width must be divisible by head count");
  req(cond_d % cond_heads == 0, "cond encoder width must be divisible by head count");
  req(diffusion_steps > 0, "diffusion_steps must be > 0");
  req(predict == "x0" || predict == "eps", "predict must be x0 or eps");
  req(mask_ratio_min > 0 && mask_ratio_min <= mask_ratio_max && mask_ratio_max <= 1.0,
      "mask ratio range must satisfy 0 < min <= max <= 1");
  req(dedup_delta > 0, "dedup_delta must be > 0");
  req(image_size % patch == 0, "image_size must be a multiple of patch");
  req(voxel_grid % 4 == 0, "voxel_grid must be a multiple of 4");
  req(modality_none >= 0 && modality_text >= 0 && modality_image >= 0 && modality_points >= 0,
      "modality weights must be >= 0");
  req(modality_none + modality_text + modality_image + modality_points > 0,
      "at least one modality weight must be positive");
  req(train_batch > 0 && vae_batch > 0, "batch sizes must be > 0");
  req(eval_points > 0 && pc_points > 0, "point counts must be > 0");
  req(hash_bits >= 1 && hash_bits <= 16, "hash_bits must be in [1,16]");
}

RunConfig default_config() { return RunConfig{}; }

RunConfig parse_config(const std::string& text, const std::string& origin) {
  TomlReader r{parse_toml(text, origin), origin, {}};
  RunConfig c;

  r.get("profile.name", c.profile);
  if (c.profile == "desk") {
    c.max_edges = 32;
    c.max_surfaces = 16;
  } else if (c.profile == "deepcad") {
    c.max_edges = 64;
    c.max_surfaces = 32;
  } else if (c.profile == "abc") {
    c.max_edges = 128;
    c.max_surfaces = 64;
  }
  r.get("profile.max_edges", c.max_edges);
  r.get("profile.max_surfaces", c.max_surfaces);

  r.get("geometry.grid_n", c.grid_n);
  r.get("geometry.edge_m", c.edge_m);
  r.get("geometry.eps", c.eps);
  r.get("geometry.assemble_eps", c.assemble_eps);

  r.get("synth.count", c.synth_count);
  r.get("synth.seed", c.synth_seed);
  r.get("synth.pc_points", c.pc_points);

  r.get("vae.d_s", c.d_s);
  r.get("vae.d_e", c.d_e);
  r.get("vae.hidden", c.vae_hidden);
  r.get("vae.beta", c.vae_beta);
  r.get("vae.epochs", c.vae_epochs);
  r.get("vae.batch", c.vae_batch);
  r.get("vae.lr", c.vae_lr);

  r.get("mar.width", c.width);
  r.get("mar.depth", c.depth);
  r.get("mar.heads", c.heads);
  r.get("mar.denoiser_hidden", c.denoiser_hidden);
  r.get("mar.denoiser_layers", c.denoiser_layers);
  r.get("mar.diffusion_steps", c.diffusion_steps);
  r.get("mar.predict", c.predict);
  r.get("mar.mask_ratio_min", c.mask_ratio_min);
  r.get("mar.mask_ratio_max", c.mask_ratio_max);
  r.get("mar.dedup_delta", c.dedup_delta);

  r.get("cond.k", c.cond_k);
  r.get("cond.d", c.cond_d);
  r.get("cond.depth", c.cond_depth);
  r.get("cond.heads", c.cond_heads);
  r.get("cond.voxel_grid", c.voxel_grid);
  r.get("cond.image_size", c.image_size);
  r.get("cond.patch", c.patch);
  r.get("cond.text_max_tokens", c.text_max_tokens);

  r.get("train.epochs", c.train_epochs);
  r.get("train.batch", c.train_batch);
  r.get("train.lr", c.train_lr);
  r.get("train.seed", c.train_seed);
  r.get("train.modality_none", c.modality_none);
  r.get("train.modality_text", c.modality_text);
  r.get("train.modality_image", c.modality_image);
  r.get("train.modality_points", c.modality_points);

  r.get("sample.count", c.sample_count);
  r.get("sample.steps_edge", c.steps_edge);
  r.get("sample.steps_surface", c.steps_surface);
  r.get("sample.seed", c.sample_seed);

  r.get("eval.n_points", c.eval_points);
  r.get("eval.fscore_thr", c.fscore_thr);
  r.get("eval.hash_bits", c.hash_bits);

  r.check_all_used();
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  RunConfig c = parse_config(ss.str(), path);
  apply_env_overrides(c);
  return c;
}

void apply_env_overrides(RunConfig& cfg) {
  if (const char* s = std::getenv("CMT_SEED")) {
    uint64_t v = std::stoull(s);
    cfg.synth_seed = v;
    cfg.train_seed = v;
    cfg.sample_seed = v;
  }
  if (const char* s = std::getenv("CMT_THREADS")) kern::set_threads(std::stoi(s));
}

std::string RunConfig::to_toml() const {
  std::ostringstream o;
  o.precision(17);
  o << "[profile]\n"
    << "name = \"" << profile << "\"\n"
    << "max_edges = " << max_edges << "\n"
    << "max_surfaces = " << max_surfaces << "\n\n";
  o << "[geometry]\n"
    << "grid_n = " << grid_n << "\n"
    << "edge_m = " << edge_m << "\n"
    << "eps = " << eps << "\n"
    << "assemble_eps = " << assemble_eps << "\n\n";
  o << "[synth]\n"
    << "count = " << synth_count << "\n"
    << "seed = " << synth_seed << "\n"
    << "pc_points = " << pc_points << "\n\n";
  o << "[vae]\n"
    << "d_s = " << d_s << "\n"
    << "d_e = " << d_e << "\n"
    << "hidden = " << vae_hidden << "\n"
    << "beta = " << vae_beta << "\n"
    << "epochs = " << vae_epochs << "\n"
    << "batch = " << vae_batch << "\n"
    << "lr = " << vae_lr << "\n\n";
  o << "[mar]\n"
    << "width = " << width << "\n"
    << "depth = " << depth << "\n"
    << "heads = " << heads << "\n"
    << "denoiser_hidden = " << denoiser_hidden << "\n"
    << "denoiser_layers = " << denoiser_layers << "\n"
    << "diffusion_steps = " << diffusion_steps << "\n"
    << "predict = \"" << predict << "\"\n"
    << "mask_ratio_min = " << mask_ratio_min << "\n"
    << "mask_ratio_max = " << mask_ratio_max << "\n"
    << "dedup_delta = " << dedup_delta << "\n\n";
  o << "[cond]\n"
    << "k = " << cond_k << "\n"
    << "d = " << cond_d << "\n"
    << "depth = " << cond_depth << "\n"
    << "heads = " << cond_heads << "\n"
    << "voxel_grid = " << voxel_grid << "\n"
    << "image_size = " << image_size << "\n"
    << "patch = " << patch << "\n"
    << "text_max_tokens = " << text_max_tokens << "\n\n";
  o << "[train]\n"
    << "epochs = " << train_epochs << "\n"
    << "batch = " << train_batch << "\n"
    << "lr = " << train_lr << "\n"
    << "seed = " << train_seed << "\n"
    << "modality_none = " << modality_none << "\n"
    << "modality_text = " << modality_text << "\n"
    << "modality_image = " << modality_image << "\n"
    << "modality_points = " << modality_points << "\n\n";
  o << "[sample]\n"
    << "count = " << sample_count << "\n"
    << "steps_edge = " << steps_edge << "\n"
    << "steps_surface = " << steps_surface << "\n"
    << "seed = " << sample_seed << "\n\n";
  o << "[eval]\n"
    << "n_points = " << eval_points << "\n"
    << "fscore_thr = " << fscore_thr << "\n"
    << "hash_bits = " << hash_bits << "\n";
  return o.str();
}

}  // namespace cmt
