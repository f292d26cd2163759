// Training loops: stage one fits the surface/edge VAEs on local-frame
// geometry; stage two freezes them and trains the generator jointly with the
// topology head on the cached token sequences (total loss = edge + surface +
// topology). All randomness flows through one stream in a fixed order, so a
// seed reproduces the loss curve bit-exactly in single-threaded mode.
#pragma once

#include <cinttypes>
#include <cstdio>
#include <optional>

#include "cmt/cascade.hpp"
#include "cmt/dataset.hpp"
#include "cmt/image.hpp"
#include "cmt/tokens.hpp"

namespace cmt {

// --- stage one: VAEs ---------------------------------------------------------------

struct VaeData {
  Mat<float> surfaces;  // rows of flattened local-frame grids
  Mat<float> edges;     // rows of flattened local-frame polylines
};

inline VaeData collect_vae_data(const std::vector<BRepModel>& models, int grid_n, int edge_m) {
  std::vector<std::vector<double>> srow, erow;
  for (const auto& m : models) {
    for (const auto& s : m.surfaces) srow.push_back(to_local_flat(s.grid, s.bbox()));
    for (const auto& e : m.edges) erow.push_back(to_local_flat(e.points, e.bbox()));
  }
  VaeData d;
  d.surfaces = Mat<float>(int(srow.size()), grid_n * grid_n * 3);
  for (size_t i = 0; i < srow.size(); ++i)
    for (size_t j = 0; j < srow[i].size(); ++j) d.surfaces.at(int(i), int(j)) = float(srow[i][j]);
  d.edges = Mat<float>(int(erow.size()), edge_m * 3);
  for (size_t i = 0; i < erow.size(); ++i)
    for (size_t j = 0; j < erow[i].size(); ++j) d.edges.at(int(i), int(j)) = float(erow[i][j]);
  return d;
}

// Posterior-mean reconstruction RMSE per element over every row.
template <typename T>
double vae_recon_rmse(const Vae<T>& vae, const Mat<T>& data) {
  Mat<T> mu = vae.encode_mean_batch(data);
  typename nn::Mlp<T>::Cache c;
  Mat<T> xhat = vae.decoder.forward(vae.ps, mu, c);
  double acc = 0;
  for (size_t i = 0; i < data.size(); ++i) {
    double d = double(xhat.a[i]) - double(data.a[i]);
    acc += d * d;
  }
  return std::sqrt(acc / double(data.size()));
}

template <typename T>
void train_vae(Vae<T>& vae, const Mat<T>& data, int epochs, int batch, double lr, Rng& rng,
               std::string* csv = nullptr, const char* tag = "") {
  char line[160];
  const int n = data.rows;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::vector<int> order = rng.permutation(n);
    double el = 0, er = 0, ek = 0;
    int steps = 0;
    for (int start = 0; start < n; start += batch) {
      int bs = std::min(batch, n - start);
      Mat<T> x(bs, data.cols);
      for (int i = 0; i < bs; ++i)
        std::copy(data.row(order[start + i]), data.row(order[start + i]) + data.cols, x.row(i));
      vae.ps.zero_grad();
      auto res = vae.loss_and_grad(x, rng);
      vae.ps.adam_step(lr);
      el += res.loss;
      er += res.recon;
      ek += res.kl;
      ++steps;
    }
    if (csv) {
      std::snprintf(line, sizeof(line), "%s,%d,%.9g,%.9g,%.9g\n", tag, epoch, el / steps,
                    er / steps, ek / steps);
      *csv += line;
    }
  }
}

// --- token cache -------------------------------------------------------------------

template <typename T>
TokenSet build_token_set(const Tokenizer<T>& tok, const std::vector<BRepModel>& models) {
  TokenSet ts;
  ts.d_e = tok.d_e();
  ts.d_s = tok.d_s();
  ts.max_edges = tok.max_edges;
  ts.max_surfaces = tok.max_surfaces;
  for (const auto& m : models) {
    TokenizedModel tm = tok.build_tokens(m);
    TokenSetEntry e;
    e.n_e = int(tm.edge_tokens.size());
    e.n_s = int(tm.surf_tokens.size());
    for (const auto& row : tm.edge_tokens)
      for (double v : row) e.edges.push_back(float(v));
    for (const auto& row : tm.surf_tokens)
      for (double v : row) e.surfaces.push_back(float(v));
    for (const auto& row : tm.adjacency)
      for (uint8_t v : row) e.adjacency.push_back(v);
    ts.entries.push_back(std::move(e));
  }
  return ts;
}

// --- stage two: generator + topology ---------------------------------------------------

// Per-item conditioning data kept in memory for conditional training.
struct CondData {
  std::vector<std::string> captions;
  std::vector<PointSample> points;
  std::vector<Image> images;
};

enum class Modality { None = 0, Text, ImageM, Points };

struct StepLosses {
  double edge = 0, surf = 0, topo = 0, total = 0;
};

template <typename T>
struct JointTrainer {
  const RunConfig* cfg = nullptr;
  const TokenSet* tokens = nullptr;
  const CondData* cond_data = nullptr;  // may be null for unconditional-only
  Rng rng;

  explicit JointTrainer(const RunConfig& c, const TokenSet& ts, const CondData* cd)
      : cfg(&c), tokens(&ts), cond_data(cd), rng(c.train_seed) {}

  Modality draw_modality() {
    double wn = cfg->modality_none, wt = cfg->modality_text, wi = cfg->modality_image,
           wp = cfg->modality_points;
    double total = wn + wt + wi + wp;
    double r = rng.uniform() * total;
    if ((r -= wn) < 0) return Modality::None;
    if ((r -= wt) < 0) return Modality::Text;
    if ((r -= wi) < 0) return Modality::ImageM;
    return Modality::Points;
  }

  Condition make_condition(Modality m, int item) const {
    switch (m) {
      case Modality::None: return NullCondition{};
      case Modality::Text: return TextCondition{cond_data->captions[item]};
      case Modality::ImageM: return ImageCondition{cond_data->images[item]};
      case Modality::Points: return PointsCondition{cond_data->points[item]};
    }
    return NullCondition{};
  }

  // Builds padded token mats + mask/t/eps draws for one stage.
  void fill_section(Mat<T>& dst, const std::vector<float>& src, int n_real, int len, int dim,
                    int item_row0) {
    for (int i = 0; i < n_real; ++i)
      for (int j = 0; j < dim; ++j) dst.at(item_row0 + i, j) = T(src[size_t(i) * dim + j]);
    for (int i = n_real; i < len; ++i) {
      int copy_of = rng.uniform_int(n_real);
      for (int j = 0; j < dim; ++j)
        dst.at(item_row0 + i, j) = dst.at(item_row0 + copy_of, j);
    }
  }

  void fill_plan_randoms(typename MarNet<T>::TrainPlan& plan, const MarNet<T>& net) {
    const int B = plan.B;
    plan.masked.assign(size_t(B) * net.L_total, 0);
    plan.t.assign(size_t(B) * net.L_total, 1);
    for (int b = 0; b < B; ++b) {
      MaskPlan mp = random_mask_plan(net.L_total, cfg->mask_ratio_min, cfg->mask_ratio_max, rng);
      for (int s = 0; s < net.L_total; ++s) {
        plan.masked[b * net.L_total + s] = mp.masked[s];
        plan.t[b * net.L_total + s] = 1 + rng.uniform_int(net.sched.steps);
      }
    }
    for (size_t sec = 0; sec < net.sections.size(); ++sec) {
      plan.eps[sec] = Mat<T>(B * net.sections[sec].length, net.sections[sec].token_dim);
      for (auto& v : plan.eps[sec].a) v = T(rng.normal());
    }
  }

  // One optimizer step of the cascade on the given items; Eq.4 objective.
  StepLosses step_cascade(CascadeModel<T>& model, const std::vector<int>& items) {
    const int B = int(items.size());
    const int K = model.edge_net.prefix_k;
    const int D = model.edge_net.cond_d;
    model.zero_grad();

    Modality mod = draw_modality();
    bool noise_topo = rng.uniform() < 0.5;

    // token plans
    typename MarNet<T>::TrainPlan eplan, splan;
    eplan.B = splan.B = B;
    eplan.tokens = {Mat<T>(B * model.max_edges, model.edge_dim)};
    eplan.eps.resize(1);
    splan.tokens = {Mat<T>(B * model.max_surfaces, model.surf_dim)};
    splan.eps.resize(1);
    std::vector<Mat<T>> true_edges(B), true_surfs(B);
    for (int b = 0; b < B; ++b) {
      const TokenSetEntry& e = tokens->entries[items[b]];
      fill_section(eplan.tokens[0], e.edges, e.n_e, model.max_edges, model.edge_dim,
                   b * model.max_edges);
      fill_section(splan.tokens[0], e.surfaces, e.n_s, model.max_surfaces, model.surf_dim,
                   b * model.max_surfaces);
      true_edges[b] = Mat<T>(e.n_e, model.edge_dim);
      for (int i = 0; i < e.n_e; ++i)
        for (int j = 0; j < model.edge_dim; ++j)
          true_edges[b].at(i, j) = T(e.edges[size_t(i) * model.edge_dim + j]);
      true_surfs[b] = Mat<T>(e.n_s, model.surf_dim);
      for (int i = 0; i < e.n_s; ++i)
        for (int j = 0; j < model.surf_dim; ++j)
          true_surfs[b].at(i, j) = T(e.surfaces[size_t(i) * model.surf_dim + j]);
    }
    fill_plan_randoms(eplan, model.edge_net);
    fill_plan_randoms(splan, model.surf_net);

    // conditions
    std::vector<typename CondEncoder<T>::Cache> ccache(B);
    Mat<T> z(B * K, D);
    for (int b = 0; b < B; ++b) {
      Mat<T> zb = model.cond.encode(make_condition(mod, items[b]), ccache[b]);
      for (int i = 0; i < K; ++i)
        std::copy(zb.row(i), zb.row(i) + D, z.row(b * K + i));
    }

    // edge stage
    auto eres = model.edge_net.train_loss(z, eplan);

    // edge projector (teacher-forced on true edges)
    std::vector<typename EdgeProjector<T>::Cache> pcache(B);
    Mat<T> q(B * K, D);
    for (int b = 0; b < B; ++b) {
      Mat<T> zb(K, D);
      for (int i = 0; i < K; ++i) std::copy(z.row(b * K + i), z.row(b * K + i) + D, zb.row(i));
      Mat<T> qb = model.projector.forward(true_edges[b], zb, pcache[b]);
      for (int i = 0; i < K; ++i) std::copy(qb.row(i), qb.row(i) + D, q.row(b * K + i));
    }

    // surface stage
    auto sres = model.surf_net.train_loss(q, splan);

    // projector backward -> additional dZ
    Mat<T> dz_total = eres.dprefix;
    for (int b = 0; b < B; ++b) {
      Mat<T> dqb(K, D);
      for (int i = 0; i < K; ++i)
        std::copy(sres.dprefix.row(b * K + i), sres.dprefix.row(b * K + i) + D, dqb.row(i));
      Mat<T> dzb = model.projector.backward(dqb, pcache[b]);
      for (int i = 0; i < K; ++i)
        for (int j = 0; j < D; ++j) dz_total.at(b * K + i, j) += dzb.at(i, j);
    }

    // topology head on ground-truth tokens (optionally noised)
    double l_topo = 0;
    for (int b = 0; b < B; ++b) {
      Mat<T> e_in = true_edges[b], s_in = true_surfs[b];
      if (noise_topo) {
        for (auto& v : e_in.a) v += T(0.02 * rng.normal());
        for (auto& v : s_in.a) v += T(0.02 * rng.normal());
      }
      l_topo += model.topo.loss_and_grad(e_in, s_in, tokens->entries[items[b]].adjacency);
    }
    l_topo /= B;
    for (auto& g : model.topo.ps.g) g = T(double(g) / B);

    // condition encoder backward
    for (int b = 0; b < B; ++b) {
      Mat<T> dzb(K, D);
      for (int i = 0; i < K; ++i)
        std::copy(dz_total.row(b * K + i), dz_total.row(b * K + i) + D, dzb.row(i));
      model.cond.backward(dzb, ccache[b]);
    }

    model.adam_step(cfg->train_lr);
    StepLosses out;
    out.edge = eres.loss;
    out.surf = sres.loss;
    out.topo = l_topo;
    out.total = total_loss(out.edge, out.surf, out.topo);
    return out;
  }

  // One optimizer step of the single joint-sequence network.
  StepLosses step_single(SingleModel<T>& model, const std::vector<int>& items) {
    const int B = int(items.size());
    const int K = model.net.prefix_k;
    const int D = model.net.cond_d;
    model.zero_grad();

    Modality mod = draw_modality();
    bool noise_topo = rng.uniform() < 0.5;

    typename MarNet<T>::TrainPlan plan;
    plan.B = B;
    plan.tokens = {Mat<T>(B * model.max_edges, model.edge_dim),
                   Mat<T>(B * model.max_surfaces, model.surf_dim)};
    plan.eps.resize(2);
    std::vector<Mat<T>> true_edges(B), true_surfs(B);
    for (int b = 0; b < B; ++b) {
      const TokenSetEntry& e = tokens->entries[items[b]];
      fill_section(plan.tokens[0], e.edges, e.n_e, model.max_edges, model.edge_dim,
                   b * model.max_edges);
      fill_section(plan.tokens[1], e.surfaces, e.n_s, model.max_surfaces, model.surf_dim,
                   b * model.max_surfaces);
      true_edges[b] = Mat<T>(e.n_e, model.edge_dim);
      for (int i = 0; i < e.n_e; ++i)
        for (int j = 0; j < model.edge_dim; ++j)
          true_edges[b].at(i, j) = T(e.edges[size_t(i) * model.edge_dim + j]);
      true_surfs[b] = Mat<T>(e.n_s, model.surf_dim);
      for (int i = 0; i < e.n_s; ++i)
        for (int j = 0; j < model.surf_dim; ++j)
          true_surfs[b].at(i, j) = T(e.surfaces[size_t(i) * model.surf_dim + j]);
    }
    fill_plan_randoms(plan, model.net);

    std::vector<typename CondEncoder<T>::Cache> ccache(B);
    Mat<T> z(B * K, D);
    for (int b = 0; b < B; ++b) {
      Mat<T> zb = model.cond.encode(make_condition(mod, items[b]), ccache[b]);
      for (int i = 0; i < K; ++i)
        std::copy(zb.row(i), zb.row(i) + D, z.row(b * K + i));
    }

    auto res = model.net.train_loss(z, plan);

    double l_topo = 0;
    for (int b = 0; b < B; ++b) {
      Mat<T> e_in = true_edges[b], s_in = true_surfs[b];
      if (noise_topo) {
        for (auto& v : e_in.a) v += T(0.02 * rng.normal());
        for (auto& v : s_in.a) v += T(0.02 * rng.normal());
      }
      l_topo += model.topo.loss_and_grad(e_in, s_in, tokens->entries[items[b]].adjacency);
    }
    l_topo /= B;
    for (auto& g : model.topo.ps.g) g = T(double(g) / B);

    for (int b = 0; b < B; ++b) {
      Mat<T> dzb(K, D);
      for (int i = 0; i < K; ++i)
        std::copy(res.dprefix.row(b * K + i), res.dprefix.row(b * K + i) + D, dzb.row(i));
      model.cond.backward(dzb, ccache[b]);
    }

    model.adam_step(cfg->train_lr);
    StepLosses out;
    out.edge = res.section_loss[0];
    out.surf = res.section_loss[1];
    out.topo = l_topo;
    out.total = total_loss(out.edge, out.surf, out.topo);
    return out;
  }

  // Epoch loop shared by both architectures; appends one CSV row per step.
  template <typename ModelT, typename StepFn>
  void train(ModelT& model, StepFn step, std::string* csv,
             const std::function<void(int, const StepLosses&)>& on_epoch = {}) {
    const int n = int(tokens->entries.size());
    char line[200];
    for (int epoch = 0; epoch < cfg->train_epochs; ++epoch) {
      std::vector<int> order = rng.permutation(n);
      StepLosses sum;
      int steps = 0;
      for (int start = 0; start + cfg->train_batch <= n; start += cfg->train_batch) {
        std::vector<int> items(order.begin() + start, order.begin() + start + cfg->train_batch);
        StepLosses l = step(model, items);
        sum.edge += l.edge;
        sum.surf += l.surf;
        sum.topo += l.topo;
        sum.total += l.total;
        ++steps;
      }
      if (steps == 0) throw std::runtime_error("train: dataset smaller than one batch");
      StepLosses mean{sum.edge / steps, sum.surf / steps, sum.topo / steps, sum.total / steps};
      if (csv) {
        std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%.9g,%.9g\n", epoch, mean.edge, mean.surf,
                      mean.topo, mean.total);
        *csv += line;
      }
      if (on_epoch) on_epoch(epoch, mean);
    }
  }
};

}  // namespace cmt
