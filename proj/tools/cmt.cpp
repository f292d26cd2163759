// cmt: dataset synthesis, two-stage training, sampling, evaluation and
// inspection for the cascade B-Rep generator.
#include <cinttypes>
#include <cstdio>
#include <filesystem>

#include "CLI11.hpp"
#include "cmt/workflows.hpp"
#include "json.hpp"

using namespace cmt;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string id_name(int id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", id);
  return buf;
}

RunConfig resolve_config(const std::string& config_path) {
  if (config_path.empty()) {
    RunConfig cfg = default_config();
    apply_env_overrides(cfg);
    return cfg;
  }
  return load_config(config_path);
}

struct ConditionFlags {
  std::string text, image, points;

  Condition build(const RunConfig& cfg) const {
    int given = int(!text.empty()) + int(!image.empty()) + int(!points.empty());
    if (given > 1) throw std::runtime_error("give at most one of --text / --image / --points");
    if (!text.empty()) return TextCondition{text};
    if (!image.empty()) {
      Image img = load_png(image);
      if (img.width != cfg.image_size || img.height != cfg.image_size)
        throw std::runtime_error("conditioning image must be " + std::to_string(cfg.image_size) +
                                 "x" + std::to_string(cfg.image_size));
      return ImageCondition{std::move(img)};
    }
    if (!points.empty()) return PointsCondition{load_pointcloud(points)};
    return NullCondition{};
  }
};

int cmd_synth(const std::string& config_path, const std::string& out, int count, int64_t seed) {
  RunConfig cfg = resolve_config(config_path);
  if (count > 0) cfg.synth_count = count;
  if (seed >= 0) cfg.synth_seed = uint64_t(seed);
  Dataset ds = synth_dataset(cfg, out);
  std::printf("synth: wrote %zu models to %s\n", ds.items.size(), out.c_str());
  return 0;
}

int cmd_train_vae(const std::string& config_path, const std::string& data,
                  const std::string& out) {
  RunConfig cfg = resolve_config(config_path);
  Dataset ds = Dataset::open(data);
  std::vector<BRepModel> models;
  for (const auto& it : ds.items) models.push_back(ds.load_model(it.id));
  VaePair vaes = build_vaes(cfg);
  VaeTrainOutput res = train_vaes(vaes, cfg, models);
  save_vaes(out, vaes, cfg);
  write_text_file(out + "/loss_curve.csv", res.csv);
  std::printf("train-vae: surface rmse %.5f, edge rmse %.5f -> %s\n", res.surf_rmse,
              res.edge_rmse, out.c_str());
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data, const std::string& vae,
              const std::string& out, const std::string& arch, const std::string& init) {
  RunConfig cfg = resolve_config(config_path);
  Dataset ds = Dataset::open(data);
  VaePair vaes = load_vaes(vae);
  Tokenizer<float> tok = make_tokenizer(vaes, cfg);

  std::vector<BRepModel> models;
  for (const auto& it : ds.items) models.push_back(ds.load_model(it.id));
  TokenSet tokens = build_token_set(tok, models);
  tokens.save(out + "/tokens");

  CondData cond_data = load_cond_data(ds, cfg);
  JointTrainer<float> trainer(cfg, tokens, &cond_data);
  std::string csv = "epoch,l_edge,l_surf,l_topo,total\n";
  auto progress = [&](int epoch, const StepLosses& l) {
    if (epoch % 10 == 0 || epoch == cfg.train_epochs - 1) {
      std::printf("epoch %4d  edge %.4f  surf %.4f  topo %.5f  total %.4f\n", epoch, l.edge,
                  l.surf, l.topo, l.total);
      std::fflush(stdout);
    }
  };

  if (arch == "cascade") {
    CascadeModel<float> model;
    Rng rng(cfg.train_seed);
    model.init(cfg, rng);
    if (!init.empty()) load_checkpoint(init, "cascade", model.stores());
    trainer.train(
        model,
        [&](CascadeModel<float>& m, const std::vector<int>& items) {
          return trainer.step_cascade(m, items);
        },
        &csv, progress);
    save_cascade(out, model, cfg);
  } else if (arch == "single") {
    SingleModel<float> model;
    Rng rng(cfg.train_seed);
    model.init(cfg, rng);
    if (!init.empty()) load_checkpoint(init, "single", model.stores());
    trainer.train(
        model,
        [&](SingleModel<float>& m, const std::vector<int>& items) {
          return trainer.step_single(m, items);
        },
        &csv, progress);
    save_single(out, model, cfg);
  } else {
    throw std::runtime_error("--arch must be cascade or single");
  }
  write_text_file(out + "/loss_curve.csv", csv);
  std::printf("train: checkpoint -> %s\n", out.c_str());
  return 0;
}

int cmd_sample(const std::string& model_dir, const std::string& vae, const std::string& out,
               int count, int64_t seed, int steps_edge, int steps_surface,
               const ConditionFlags& cond_flags) {
  RunConfig cfg;
  auto meta = checkpoint_meta(model_dir);
  std::string kind = meta.count("arch") ? meta.at("arch") : "cascade";
  VaePair vaes = load_vaes(vae);

  std::optional<CascadeModel<float>> cascade;
  std::optional<SingleModel<float>> single;
  if (kind == "cascade")
    cascade.emplace(load_cascade(model_dir, &cfg));
  else
    single.emplace(load_single(model_dir, &cfg));
  apply_env_overrides(cfg);
  if (count > 0) cfg.sample_count = count;
  if (seed >= 0) cfg.sample_seed = uint64_t(seed);
  if (steps_edge >= 0) cfg.steps_edge = steps_edge;
  if (steps_surface >= 0) cfg.steps_surface = steps_surface;

  Tokenizer<float> tok = make_tokenizer(vaes, cfg);
  Condition cond = cond_flags.build(cfg);

  ensure_dir(out);
  ensure_dir(out + "/models");
  Rng root(cfg.sample_seed);
  ordered_json items = ordered_json::array();
  int n_valid = 0;
  for (int i = 0; i < cfg.sample_count; ++i) {
    Rng rng = root.fork(uint64_t(i));
    SampleResult res;
    if (cascade)
      res = sample_cascade(*cascade, tok, cfg, cond, cfg.steps_edge, cfg.steps_surface, rng);
    else
      res = sample_single(*single, tok, cfg, cond,
                          cfg.steps_edge > 0 && cfg.steps_surface > 0
                              ? cfg.steps_edge + cfg.steps_surface
                              : 0,
                          rng);
    std::string base = out + "/models/" + id_name(i);
    save_json(res.model, base + ".json");
    save_obj(res.model, base + ".obj");
    write_text_file(base + ".report.json", report_to_json(res.report));
    if (res.report.valid) ++n_valid;

    ordered_json ji;
    ji["id"] = i;
    ji["valid"] = res.report.valid;
    ji["n_e"] = res.model.num_edges();
    ji["n_s"] = res.model.num_surfaces();
    items.push_back(std::move(ji));
  }
  ordered_json manifest;
  manifest["count"] = cfg.sample_count;
  manifest["seed"] = cfg.sample_seed;
  manifest["steps_edge"] = cfg.steps_edge;
  manifest["steps_surface"] = cfg.steps_surface;
  manifest["valid"] = n_valid;
  manifest["items"] = std::move(items);
  write_text_file(out + "/manifest.json", manifest.dump(2) + "\n");
  write_text_file(out + "/config.toml", cfg.to_toml());
  std::printf("sample: %d/%d valid -> %s\n", n_valid, cfg.sample_count, out.c_str());
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& gen_dir,
             const std::string& ref_dir, const std::string& out,
             const std::string& train_manifest) {
  RunConfig cfg = resolve_config(config_path);
  std::vector<BRepModel> gen = load_models_dir(gen_dir);
  std::vector<BRepModel> ref = load_models_dir(ref_dir);
  if (gen.empty() || ref.empty()) throw std::runtime_error("eval: empty model directory");

  std::unordered_set<uint64_t> train_hashes;
  if (!train_manifest.empty()) {
    ordered_json j = ordered_json::parse(read_text_file(train_manifest));
    for (const auto& it : j.at("items"))
      train_hashes.insert(std::stoull(it.at("hash").get<std::string>(), nullptr, 16));
  }

  // per-model sampling stream derived from the model's content hash: identical
  // models yield identical samples, so identity sets give COV 100 / MMD 0
  auto sample_of = [&](const BRepModel& m) {
    Rng rng(cfg.sample_seed ^ quantize_hash(m, cfg.hash_bits));
    return sample_points(m, cfg.eval_points, rng);
  };
  std::vector<PointSample> gen_pts, ref_pts;
  for (const auto& m : gen) gen_pts.push_back(sample_of(m));
  for (const auto& m : ref) ref_pts.push_back(sample_of(m));

  DistributionalResult dist = distributional(gen_pts, ref_pts);
  NuvResult nuv = novel_unique_valid(gen, train_hashes, cfg.eps, cfg.hash_bits);

  ensure_dir(out);
  std::string csv = "id,valid,n_e,n_s,hash,novel,min_chamfer\n";
  ordered_json per_model = ordered_json::array();
  char line[256];
  for (size_t i = 0; i < gen.size(); ++i) {
    bool valid = validate_brep(gen[i], cfg.eps).valid;
    uint64_t h = quantize_hash(gen[i], cfg.hash_bits);
    bool novel = train_hashes.empty() ? true : !train_hashes.count(h);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : ref_pts) best = std::min(best, chamfer(gen_pts[i], r));
    std::snprintf(line, sizeof(line), "%zu,%d,%d,%d,%016" PRIx64 ",%d,%.9g\n", i, valid ? 1 : 0,
                  gen[i].num_edges(), gen[i].num_surfaces(), h, novel ? 1 : 0, best);
    csv += line;
    ordered_json jm;
    jm["id"] = i;
    jm["valid"] = valid;
    jm["n_e"] = gen[i].num_edges();
    jm["n_s"] = gen[i].num_surfaces();
    jm["min_chamfer"] = best;
    per_model.push_back(std::move(jm));
  }
  std::snprintf(line, sizeof(line), "aggregate,cov,%.6g,mmd,%.6g,jsd,%.6g\n", dist.cov, dist.mmd,
                dist.jsd);
  csv += line;
  std::snprintf(line, sizeof(line), "aggregate,novel,%.6g,unique,%.6g,valid,%.6g\n", nuv.novel,
                nuv.unique, nuv.valid);
  csv += line;
  write_text_file(out + "/metrics.csv", csv);

  ordered_json report;
  report["cov"] = dist.cov;
  report["mmd"] = dist.mmd;
  report["jsd"] = dist.jsd;
  report["novel"] = nuv.novel;
  report["unique"] = nuv.unique;
  report["valid"] = nuv.valid;
  report["n_gen"] = gen.size();
  report["n_ref"] = ref.size();
  report["per_model"] = std::move(per_model);
  write_text_file(out + "/report.json", report.dump(2) + "\n");
  write_text_file(out + "/config.toml", cfg.to_toml());
  std::printf("eval: COV %.2f  MMD %.4f  JSD %.4f  Novel %.1f  Unique %.1f  Valid %.1f -> %s\n",
              dist.cov, dist.mmd, dist.jsd, nuv.novel, nuv.unique, nuv.valid, out.c_str());
  return 0;
}

int cmd_inspect(const std::string& path) {
  namespace fs = std::filesystem;
  if (fs::is_directory(path)) {
    Dataset ds = Dataset::open(path);
    int by_family[3] = {0, 0, 0};
    for (const auto& it : ds.items) by_family[int(it.family)] += 1;
    std::printf("dataset %s: %zu models (box %d, lblock %d, cylinder %d)\n", path.c_str(),
                ds.items.size(), by_family[0], by_family[1], by_family[2]);
    return 0;
  }
  BRepModel m = load_json(path);
  auto rep = validate_brep(m);
  BBox b = m.bbox();
  std::printf("model %s\n", path.c_str());
  std::printf("  surfaces %d, edges %d\n", m.num_surfaces(), m.num_edges());
  std::printf("  bbox [%.3f %.3f %.3f] .. [%.3f %.3f %.3f]\n", b.x1, b.y1, b.z1, b.x2, b.y2,
              b.z2);
  std::printf("  hash %016" PRIx64 "\n", m.surfaces.empty() ? uint64_t(0) : quantize_hash(m));
  std::printf("  valid %s\n", rep.valid ? "yes" : "no");
  for (const auto& f : rep.failures)
    std::printf("    %s: %s\n", failure_code_name(f.first), f.second.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cascade masked-autoregressive B-Rep generator"};
  app.require_subcommand(1);

  std::string config_path, out, data, vae, model_dir, arch = "cascade", init, gen_dir, ref_dir,
                              train_manifest, inspect_path;
  int count = -1, steps_edge = -1, steps_surface = -1;
  int64_t seed = -1;
  ConditionFlags cond;

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--config", config_path);
  synth->add_option("--out", out)->required();
  synth->add_option("--count", count);
  synth->add_option("--seed", seed);

  auto* train_vae_cmd = app.add_subcommand("train-vae", "train the surface/edge VAEs");
  train_vae_cmd->add_option("--config", config_path);
  train_vae_cmd->add_option("--data", data)->required();
  train_vae_cmd->add_option("--out", out)->required();

  auto* train = app.add_subcommand("train", "train the generator and topology head");
  train->add_option("--config", config_path);
  train->add_option("--data", data)->required();
  train->add_option("--vae", vae)->required();
  train->add_option("--out", out)->required();
  train->add_option("--arch", arch)->check(CLI::IsMember({"cascade", "single"}));
  train->add_option("--init", init);

  auto* sample = app.add_subcommand("sample", "generate B-Rep models from a checkpoint");
  sample->add_option("--model", model_dir)->required();
  sample->add_option("--vae", vae)->required();
  sample->add_option("--out", out)->required();
  sample->add_option("--count", count);
  sample->add_option("--seed", seed);
  sample->add_option("--steps-edge", steps_edge);
  sample->add_option("--steps-surface", steps_surface);
  sample->add_option("--text", cond.text);
  sample->add_option("--image", cond.image);
  sample->add_option("--points", cond.points);

  auto* eval = app.add_subcommand("eval", "compute generative metrics between model sets");
  eval->add_option("--config", config_path);
  eval->add_option("--gen", gen_dir)->required();
  eval->add_option("--ref", ref_dir)->required();
  eval->add_option("--out", out)->required();
  eval->add_option("--train-manifest", train_manifest);

  auto* inspect = app.add_subcommand("inspect", "summarize a model file or dataset directory");
  inspect->add_option("path", inspect_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(config_path, out, count, seed);
    if (train_vae_cmd->parsed()) return cmd_train_vae(config_path, data, out);
    if (train->parsed()) return cmd_train(config_path, data, vae, out, arch, init);
    if (sample->parsed())
      return cmd_sample(model_dir, vae, out, count, seed, steps_edge, steps_surface, cond);
    if (eval->parsed()) return cmd_eval(config_path, gen_dir, ref_dir, out, train_manifest);
    if (inspect->parsed()) return cmd_inspect(inspect_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
