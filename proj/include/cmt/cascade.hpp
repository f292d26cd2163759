// Model bundles: the cascade (edge MAR -> edge projector -> surface MAR) with
// its topology head and condition encoder, and the single joint-sequence
// network used by the ablation. Generation is edges first, then surfaces
// conditioned on them; both sequences are deduplicated before topology
// prediction.
#pragma once

#include "cmt/condition.hpp"
#include "cmt/config.hpp"
#include "cmt/mar.hpp"
#include "cmt/tokens.hpp"
#include "cmt/topology.hpp"

namespace cmt {

template <typename T>
struct CascadeModel {
  MarNet<T> edge_net;
  MarNet<T> surf_net;
  EdgeProjector<T> projector;
  TopoHead<T> topo;
  CondEncoder<T> cond;
  int edge_dim = 0, surf_dim = 0;
  int max_edges = 0, max_surfaces = 0;

  void init(const RunConfig& cfg, Rng& rng) {
    edge_dim = cfg.d_e + 12;
    surf_dim = 6 + cfg.d_s;
    max_edges = cfg.max_edges;
    max_surfaces = cfg.max_surfaces;
    const bool x0 = cfg.predict == "x0";
    edge_net.init({{edge_dim, cfg.max_edges}}, cfg.width, cfg.depth, cfg.heads, cfg.cond_k,
                  cfg.cond_d, cfg.denoiser_hidden, cfg.denoiser_layers, cfg.diffusion_steps, x0,
                  rng);
    surf_net.init({{surf_dim, cfg.max_surfaces}}, cfg.width, cfg.depth, cfg.heads, cfg.cond_k,
                  cfg.cond_d, cfg.denoiser_hidden, cfg.denoiser_layers, cfg.diffusion_steps, x0,
                  rng);
    projector.init(edge_dim, cfg.cond_d, cfg.cond_k, 2, cfg.cond_heads, rng);
    topo.init(edge_dim, surf_dim, cfg.cond_d, rng);
    CondConfig cc{cfg.cond_k, cfg.cond_d,     cfg.cond_depth, cfg.cond_heads,
                  cfg.voxel_grid, cfg.image_size, cfg.patch,      cfg.text_max_tokens};
    cond.init(cc, rng);
  }

  StoreList<T> stores() {
    return {{"edge_net", &edge_net.ps},
            {"surf_net", &surf_net.ps},
            {"projector", &projector.ps},
            {"topo", &topo.ps},
            {"cond", &cond.ps}};
  }

  void zero_grad() {
    for (auto& [name, ps] : stores()) ps->zero_grad();
  }
  void adam_step(double lr) {
    for (auto& [name, ps] : stores()) ps->adam_step(lr);
  }
};

template <typename T>
struct SingleModel {
  MarNet<T> net;  // two sections: edges then surfaces, generated synchronously
  TopoHead<T> topo;
  CondEncoder<T> cond;
  int edge_dim = 0, surf_dim = 0;
  int max_edges = 0, max_surfaces = 0;

  void init(const RunConfig& cfg, Rng& rng) {
    edge_dim = cfg.d_e + 12;
    surf_dim = 6 + cfg.d_s;
    max_edges = cfg.max_edges;
    max_surfaces = cfg.max_surfaces;
    const bool x0 = cfg.predict == "x0";
    net.init({{edge_dim, cfg.max_edges}, {surf_dim, cfg.max_surfaces}}, cfg.width, cfg.depth,
             cfg.heads, cfg.cond_k, cfg.cond_d, cfg.denoiser_hidden, cfg.denoiser_layers,
             cfg.diffusion_steps, x0, rng);
    topo.init(edge_dim, surf_dim, cfg.cond_d, rng);
    CondConfig cc{cfg.cond_k, cfg.cond_d,     cfg.cond_depth, cfg.cond_heads,
                  cfg.voxel_grid, cfg.image_size, cfg.patch,      cfg.text_max_tokens};
    cond.init(cc, rng);
  }

  StoreList<T> stores() {
    return {{"net", &net.ps}, {"topo", &topo.ps}, {"cond", &cond.ps}};
  }
  void zero_grad() {
    for (auto& [name, ps] : stores()) ps->zero_grad();
  }
  void adam_step(double lr) {
    for (auto& [name, ps] : stores()) ps->adam_step(lr);
  }
};

// --- generation -------------------------------------------------------------------

struct GeneratedTokens {
  std::vector<std::vector<double>> edges;     // deduplicated
  std::vector<std::vector<double>> surfaces;  // deduplicated
  std::vector<std::vector<double>> scores;    // A, edges x surfaces
  std::vector<std::vector<uint8_t>> adjacency;
};

namespace detail {

template <typename T>
std::vector<std::vector<double>> rows_of(const Mat<T>& m) {
  std::vector<std::vector<double>> out(m.rows);
  for (int i = 0; i < m.rows; ++i) out[i] = std::vector<double>(m.row(i), m.row(i) + m.cols);
  return out;
}

template <typename T>
Mat<T> mat_of(const std::vector<std::vector<double>>& rows, int cols) {
  Mat<T> m(int(rows.size()), cols);
  for (size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < cols; ++j) m.at(int(i), j) = T(rows[i][j]);
  return m;
}

}  // namespace detail

// Edges are generated from Z, projected into the fixed-length edge condition
// Q, and surfaces are generated from Q. steps <= 0 means one step per slot.
template <typename T>
GeneratedTokens cascade_generate(const CascadeModel<T>& model, const Mat<T>& z, int steps_edge,
                                 int steps_surface, double dedup_delta, double tau, Rng& rng) {
  if (steps_edge <= 0) steps_edge = model.max_edges;
  if (steps_surface <= 0) steps_surface = model.max_surfaces;

  GeneratedTokens out;
  auto edge_mats = model.edge_net.generate(z, steps_edge, rng);
  out.edges = dedup_generated(detail::rows_of(edge_mats[0]), dedup_delta);

  typename EdgeProjector<T>::Cache pc;
  Mat<T> e_in = detail::mat_of<T>(out.edges, model.edge_dim);
  Mat<T> q = model.projector.forward(e_in, z, pc);

  auto surf_mats = model.surf_net.generate(q, steps_surface, rng);
  out.surfaces = dedup_generated(detail::rows_of(surf_mats[0]), dedup_delta);

  Mat<T> s_in = detail::mat_of<T>(out.surfaces, model.surf_dim);
  Mat<T> a = model.topo.predict(e_in, s_in);
  out.scores = detail::rows_of(a);
  out.adjacency = threshold(out.scores, tau);
  return out;
}

// Joint generation over the concatenated edge+surface sequence.
template <typename T>
GeneratedTokens single_generate(const SingleModel<T>& model, const Mat<T>& z, int n_steps,
                                double dedup_delta, double tau, Rng& rng) {
  if (n_steps <= 0) n_steps = model.max_edges + model.max_surfaces;
  GeneratedTokens out;
  auto mats = model.net.generate(z, n_steps, rng);
  out.edges = dedup_generated(detail::rows_of(mats[0]), dedup_delta);
  out.surfaces = dedup_generated(detail::rows_of(mats[1]), dedup_delta);
  Mat<T> e_in = detail::mat_of<T>(out.edges, model.edge_dim);
  Mat<T> s_in = detail::mat_of<T>(out.surfaces, model.surf_dim);
  Mat<T> a = model.topo.predict(e_in, s_in);
  out.scores = detail::rows_of(a);
  out.adjacency = threshold(out.scores, tau);
  return out;
}

}  // namespace cmt
