// Run configuration: a small TOML subset (sections, scalar key = value pairs,
// comments) parsed with line-anchored error messages, plus typed defaults and
// the dataset profiles.
#pragma once

#include <map>
#include <string>

namespace cmt {

struct RunConfig {
  // profile
  std::string profile = "desk";  // desk 32/16 | deepcad 64/32 | abc 128/64
  int max_edges = 32;
  int max_surfaces = 16;

  // geometry
  int grid_n = 8;
  int edge_m = 8;
  double eps = 1e-3;           // vertex tolerance for exact synthetic models
  double assemble_eps = 0.1;   // weld tolerance for generated models

  // synth
  int synth_count = 2000;
  uint64_t synth_seed = 7;
  int pc_points = 1024;

  // vae
  int d_s = 16;
  int d_e = 8;
  int vae_hidden = 128;
  double vae_beta = 1e-3;
  int vae_epochs = 200;
  int vae_batch = 64;
  double vae_lr = 1e-3;

  // mar
  int width = 128;
  int depth = 4;
  int heads = 4;
  int denoiser_hidden = 256;
  int denoiser_layers = 3;
  int diffusion_steps = 100;
  std::string predict = "x0";  // x0 | eps
  double mask_ratio_min = 0.7;
  double mask_ratio_max = 1.0;
  double dedup_delta = 0.05;

  // cond
  int cond_k = 8;
  int cond_d = 64;
  int cond_depth = 2;
  int cond_heads = 4;
  int voxel_grid = 16;
  int image_size = 32;
  int patch = 8;
  int text_max_tokens = 8;

  // train
  int train_epochs = 300;
  int train_batch = 64;
  double train_lr = 3e-4;
  uint64_t train_seed = 1;
  double modality_none = 1.0;
  double modality_text = 0.0;
  double modality_image = 0.0;
  double modality_points = 0.0;

  // sample
  int sample_count = 8;
  int steps_edge = 0;     // 0 = one step per sequence slot
  int steps_surface = 0;
  uint64_t sample_seed = 7;

  // eval
  int eval_points = 512;
  double fscore_thr = 0.02;
  int hash_bits = 6;

  void validate() const;  // throws with a descriptive message
  std::string to_toml() const;
};

// Parses the file, applies profile defaults, validates, then applies
// CMT_SEED / CMT_THREADS environment overrides. Errors carry "path:line:".
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig default_config();

// Applies CMT_SEED / CMT_THREADS to an already-built config.
void apply_env_overrides(RunConfig& cfg);

}  // namespace cmt
