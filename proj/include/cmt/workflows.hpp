// High-level run workflows shared by the CLI and the acceptance suite:
// dataset -> VAE training -> token cache -> generator training -> sampling ->
// evaluation, with checkpoint persistence for each stage.
#pragma once

#include <filesystem>

#include "cmt/checkpoint.hpp"
#include "cmt/metrics.hpp"
#include "cmt/trainer.hpp"

namespace cmt {

// --- VAE stage ---------------------------------------------------------------------

struct VaePair {
  Vae<float> surf, edge;
};

inline VaePair build_vaes(const RunConfig& cfg) {
  VaePair v;
  Rng rng(cfg.train_seed);
  v.surf.init(cfg.grid_n * cfg.grid_n * 3, cfg.d_s, cfg.vae_hidden, cfg.vae_beta, rng);
  v.edge.init(cfg.edge_m * 3, cfg.d_e, cfg.vae_hidden, cfg.vae_beta, rng);
  return v;
}

struct VaeTrainOutput {
  double surf_rmse = 0, edge_rmse = 0;
  std::string csv;
};

inline VaeTrainOutput train_vaes(VaePair& v, const RunConfig& cfg,
                                 const std::vector<BRepModel>& models) {
  VaeData data = collect_vae_data(models, cfg.grid_n, cfg.edge_m);
  VaeTrainOutput out;
  out.csv = "stage,epoch,loss,recon,kl\n";
  Rng rng(cfg.train_seed + 1);
  train_vae(v.surf, data.surfaces, cfg.vae_epochs, cfg.vae_batch, cfg.vae_lr, rng, &out.csv,
            "surface");
  train_vae(v.edge, data.edges, cfg.vae_epochs, cfg.vae_batch, cfg.vae_lr, rng, &out.csv, "edge");
  out.surf_rmse = vae_recon_rmse(v.surf, data.surfaces);
  out.edge_rmse = vae_recon_rmse(v.edge, data.edges);
  return out;
}

inline void save_vaes(const std::string& dir, VaePair& v, const RunConfig& cfg) {
  StoreList<float> stores = {{"surface_vae", &v.surf.ps}, {"edge_vae", &v.edge.ps}};
  save_checkpoint(dir, "vae", {{"profile", cfg.profile}}, stores);
  write_text_file(dir + "/config.toml", cfg.to_toml());
}

inline VaePair load_vaes(const std::string& dir, RunConfig* cfg_out = nullptr) {
  RunConfig cfg = parse_config(read_text_file(dir + "/config.toml"), dir + "/config.toml");
  VaePair v = build_vaes(cfg);
  StoreList<float> stores = {{"surface_vae", &v.surf.ps}, {"edge_vae", &v.edge.ps}};
  load_checkpoint(dir, "vae", stores);
  if (cfg_out) *cfg_out = cfg;
  return v;
}

inline Tokenizer<float> make_tokenizer(const VaePair& v, const RunConfig& cfg) {
  return Tokenizer<float>{&v.surf, &v.edge, cfg.grid_n, cfg.edge_m, cfg.max_edges,
                          cfg.max_surfaces};
}

// --- generator stage ------------------------------------------------------------------

inline void save_cascade(const std::string& dir, CascadeModel<float>& m, const RunConfig& cfg) {
  save_checkpoint(dir, "cascade", {{"profile", cfg.profile}, {"arch", "cascade"}}, m.stores());
  write_text_file(dir + "/config.toml", cfg.to_toml());
}

inline CascadeModel<float> load_cascade(const std::string& dir, RunConfig* cfg_out = nullptr) {
  RunConfig cfg = parse_config(read_text_file(dir + "/config.toml"), dir + "/config.toml");
  CascadeModel<float> m;
  Rng rng(cfg.train_seed);
  m.init(cfg, rng);
  load_checkpoint(dir, "cascade", m.stores());
  if (cfg_out) *cfg_out = cfg;
  return m;
}

inline void save_single(const std::string& dir, SingleModel<float>& m, const RunConfig& cfg) {
  save_checkpoint(dir, "single", {{"profile", cfg.profile}, {"arch", "single"}}, m.stores());
  write_text_file(dir + "/config.toml", cfg.to_toml());
}

inline SingleModel<float> load_single(const std::string& dir, RunConfig* cfg_out = nullptr) {
  RunConfig cfg = parse_config(read_text_file(dir + "/config.toml"), dir + "/config.toml");
  SingleModel<float> m;
  Rng rng(cfg.train_seed);
  m.init(cfg, rng);
  load_checkpoint(dir, "single", m.stores());
  if (cfg_out) *cfg_out = cfg;
  return m;
}

// Loads the conditioning data required by the config's modality weights.
inline CondData load_cond_data(const Dataset& ds, const RunConfig& cfg) {
  CondData cd;
  for (const auto& it : ds.items) cd.captions.push_back(it.caption);
  if (cfg.modality_points > 0)
    for (const auto& it : ds.items) cd.points.push_back(ds.load_points(it.id));
  if (cfg.modality_image > 0)
    for (const auto& it : ds.items) cd.images.push_back(load_png(ds.image_path(it.id)));
  return cd;
}

// --- sampling ---------------------------------------------------------------------------

struct SampleResult {
  BRepModel model;
  ValidityReport report;
  GeneratedTokens tokens;
};

template <typename ModelT>
Mat<float> condition_embedding(ModelT& model, const Condition& cond) {
  typename CondEncoder<float>::Cache cache;
  return model.cond.encode(cond, cache);
}

inline SampleResult assemble_generated(const GeneratedTokens& gen, const Tokenizer<float>& tok,
                                       const RunConfig& cfg) {
  SampleResult out;
  out.tokens = gen;
  TokenizedModel tm;
  tm.d_e = cfg.d_e;
  tm.d_s = cfg.d_s;
  tm.edge_tokens = gen.edges;
  tm.surf_tokens = gen.surfaces;
  tm.adjacency = gen.adjacency;
  auto res = assemble(tm, cfg.grid_n, cfg.edge_m, tok.surface_decoder(), tok.edge_decoder(),
                      cfg.assemble_eps);
  out.model = std::move(res.model);
  out.report = std::move(res.report);
  return out;
}

inline SampleResult sample_cascade(CascadeModel<float>& model, const Tokenizer<float>& tok,
                                   const RunConfig& cfg, const Condition& cond, int steps_edge,
                                   int steps_surface, Rng& rng) {
  Mat<float> z = condition_embedding(model, cond);
  GeneratedTokens gen =
      cascade_generate(model, z, steps_edge, steps_surface, cfg.dedup_delta, 0.5, rng);
  return assemble_generated(gen, tok, cfg);
}

inline SampleResult sample_single(SingleModel<float>& model, const Tokenizer<float>& tok,
                                  const RunConfig& cfg, const Condition& cond, int n_steps,
                                  Rng& rng) {
  Mat<float> z = condition_embedding(model, cond);
  GeneratedTokens gen = single_generate(model, z, n_steps, cfg.dedup_delta, 0.5, rng);
  return assemble_generated(gen, tok, cfg);
}

// --- evaluation --------------------------------------------------------------------------

inline std::vector<std::string> list_model_files(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> files;
  fs::path p = fs::path(dir) / "models";
  if (!fs::exists(p)) p = dir;  // allow a bare directory of model jsons
  for (const auto& e : fs::directory_iterator(p)) {
    std::string name = e.path().filename().string();
    if (name.size() > 5 && name.substr(name.size() - 5) == ".json" &&
        name.find(".report.") == std::string::npos)
      files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

inline std::vector<BRepModel> load_models_dir(const std::string& dir) {
  std::vector<BRepModel> out;
  for (const auto& f : list_model_files(dir)) out.push_back(load_json(f));
  return out;
}

}  // namespace cmt
