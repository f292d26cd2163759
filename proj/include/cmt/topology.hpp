// Cross-attention topology predictor: a single scaled dot-product scoring
// layer mapping edge/surface token pairs to adjacency probabilities, trained
// with mean squared error against the binary adjacency matrix.
#pragma once

#include "cmt/nn.hpp"

namespace cmt {

template <typename T>
struct TopoHead {
  nn::ParamStore<T> ps;
  nn::Linear<T> wq;  // edge_dim -> d_att, no bias
  nn::Linear<T> wk;  // surf_dim -> d_att, no bias
  int d_att = 0;

  void init(int edge_dim, int surf_dim, int d_att_, Rng& rng) {
    d_att = d_att_;
    wq.init(ps, "wq", edge_dim, d_att, rng, /*bias=*/false);
    wk.init(ps, "wk", surf_dim, d_att, rng, /*bias=*/false);
  }

  // A_ij = sigmoid(<Wq e_i, Wk s_j> / sqrt(d_att))
  Mat<T> predict(const Mat<T>& edge_tokens, const Mat<T>& surf_tokens) const {
    if (edge_tokens.rows == 0 || surf_tokens.rows == 0)
      throw std::invalid_argument("topo predict: empty token sequence");
    Mat<T> q = wq.forward(ps, edge_tokens);
    Mat<T> k = wk.forward(ps, surf_tokens);
    Mat<T> a;
    matmul_nt(q, k, a);
    const double scale = 1.0 / std::sqrt(double(d_att));
    for (auto& v : a.a) v = T(1.0 / (1.0 + std::exp(-double(v) * scale)));
    return a;
  }

  // Eq-style mse over all N_e x N_s entries; gradients accumulate into ps.g.
  double loss_and_grad(const Mat<T>& edge_tokens, const Mat<T>& surf_tokens,
                       const std::vector<uint8_t>& r_flat) {
    const int ne = edge_tokens.rows, ns = surf_tokens.rows;
    if (int(r_flat.size()) != ne * ns) throw std::invalid_argument("topo loss: shape mismatch");
    Mat<T> q = wq.forward(ps, edge_tokens);
    Mat<T> k = wk.forward(ps, surf_tokens);
    Mat<T> logits;
    matmul_nt(q, k, logits);
    const double scale = 1.0 / std::sqrt(double(d_att));

    double loss = 0;
    Mat<T> dlogits(ne, ns);
    const double n = double(ne) * ns;
    for (int i = 0; i < ne; ++i)
      for (int j = 0; j < ns; ++j) {
        double a = 1.0 / (1.0 + std::exp(-double(logits.at(i, j)) * scale));
        double diff = a - double(r_flat[size_t(i) * ns + j]);
        loss += diff * diff;
        dlogits.at(i, j) = T(2.0 * diff / n * a * (1.0 - a) * scale);
      }
    loss /= n;

    Mat<T> dq, dk;
    matmul(dlogits, k, dq);     // dQ = dL K
    matmul_tn(dlogits, q, dk);  // dK = dL^T Q
    wq.backward(ps, edge_tokens, dq);
    wk.backward(ps, surf_tokens, dk);
    return loss;
  }
};

// R_ij = 1 iff A_ij > tau (strict)
inline std::vector<std::vector<uint8_t>> threshold(const std::vector<std::vector<double>>& a,
                                                   double tau = 0.5) {
  std::vector<std::vector<uint8_t>> r(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    r[i].resize(a[i].size());
    for (size_t j = 0; j < a[i].size(); ++j) r[i][j] = a[i][j] > tau ? 1 : 0;
  }
  return r;
}

// Eq-form mean squared error between a score matrix and a binary adjacency.
inline double topo_loss(const std::vector<std::vector<double>>& a,
                        const std::vector<std::vector<uint8_t>>& r) {
  if (a.size() != r.size()) throw std::invalid_argument("topo_loss: shape mismatch");
  double loss = 0;
  size_t n = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != r[i].size()) throw std::invalid_argument("topo_loss: shape mismatch");
    for (size_t j = 0; j < a[i].size(); ++j) {
      double d = a[i][j] - double(r[i][j]);
      loss += d * d;
      n += 1;
    }
  }
  if (n == 0) throw std::invalid_argument("topo_loss: empty matrices");
  return loss / double(n);
}

// Unweighted total objective.
inline double total_loss(double l_edge, double l_surf, double l_topo) {
  return l_edge + l_surf + l_topo;
}

}  // namespace cmt
