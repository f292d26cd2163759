// Continuous tokenization: edge tokens are latent | bbox | start | end,
// surface tokens are bbox | latent, both with the geometry VAE applied in the
// primitive's local bounding-box frame. Sequences are canonically ordered by
// bounding box, padded with duplicated tokens and deduplicated after
// generation.
#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "cmt/assembler.hpp"
#include "cmt/brep.hpp"
#include "cmt/frame.hpp"
#include "cmt/vae.hpp"

namespace cmt {

struct TokenSequence {
  std::vector<std::vector<double>> tokens;
  int true_len = 0;
  std::vector<int> pad_map;  // indices of duplicated-pad slots
};

// Stable lexicographic ascending order on (x1,y1,z1,x2,y2,z2).
inline std::vector<int> order_tokens(const std::vector<std::array<double, 6>>& bboxes) {
  std::vector<int> perm(bboxes.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = int(i);
  std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
    const auto& x = bboxes[a];
    const auto& y = bboxes[b];
    for (int k = 0; k < 6; ++k) {
      if (x[k] < y[k]) return true;
      if (x[k] > y[k]) return false;
    }
    return false;
  });
  return perm;
}

// Pads with uniform-random copies of real tokens up to max_len.
inline TokenSequence pad_sequence(const std::vector<std::vector<double>>& tokens, int max_len,
                                  Rng& rng) {
  if (int(tokens.size()) > max_len)
    throw std::invalid_argument("pad_sequence: sequence longer than max_len");
  TokenSequence out;
  out.tokens = tokens;
  out.true_len = int(tokens.size());
  for (int i = out.true_len; i < max_len; ++i) {
    int src = rng.uniform_int(out.true_len);
    out.tokens.push_back(tokens[src]);
    out.pad_map.push_back(i);
  }
  return out;
}

// Merges tokens whose full-vector L-inf distance is below delta (keep-first).
inline std::vector<std::vector<double>> dedup_generated(
    const std::vector<std::vector<double>>& tokens, double delta) {
  std::vector<std::vector<double>> kept;
  for (const auto& t : tokens) {
    bool dup = false;
    for (const auto& k : kept) {
      double linf = 0;
      for (size_t j = 0; j < t.size(); ++j) linf = std::max(linf, std::abs(t[j] - k[j]));
      if (linf < delta) {
        dup = true;
        break;
      }
    }
    if (!dup) kept.push_back(t);
  }
  return kept;
}

template <typename T>
struct Tokenizer {
  const Vae<T>* surface_vae = nullptr;
  const Vae<T>* edge_vae = nullptr;
  int grid_n = 8, edge_m = 8;
  int max_edges = 32, max_surfaces = 16;

  int d_s() const { return surface_vae->latent_dim; }
  int d_e() const { return edge_vae->latent_dim; }
  int surf_dim() const { return 6 + d_s(); }
  int edge_dim() const { return d_e() + 12; }

  // Canonically ordered token sequences plus the consistently re-indexed
  // adjacency. Throws when the model exceeds the profile's sequence lengths
  // (over-length models are rejected, not truncated).
  TokenizedModel build_tokens(const BRepModel& model) const {
    if (model.num_edges() > max_edges || model.num_surfaces() > max_surfaces)
      throw std::invalid_argument("build_tokens: model exceeds maximum sequence lengths");
    if (model.num_edges() == 0 || model.num_surfaces() == 0)
      throw std::invalid_argument("build_tokens: empty model");

    TokenizedModel tm;
    tm.d_e = d_e();
    tm.d_s = d_s();

    std::vector<std::array<double, 6>> sboxes, eboxes;
    std::vector<std::vector<double>> stoks, etoks;
    for (const auto& s : model.surfaces) {
      if (int(s.grid.size()) != grid_n * grid_n)
        throw std::invalid_argument("build_tokens: unexpected grid resolution");
      BBox b = s.bbox();
      std::vector<double> local = to_local_flat(s.grid, b);
      std::vector<T> in(local.begin(), local.end());
      std::vector<T> lat = surface_vae->encode_mean(std::span<const T>(in));
      std::vector<double> tok = {b.x1, b.y1, b.z1, b.x2, b.y2, b.z2};
      for (T v : lat) tok.push_back(double(v));
      stoks.push_back(std::move(tok));
      sboxes.push_back({b.x1, b.y1, b.z1, b.x2, b.y2, b.z2});
    }
    for (const auto& e : model.edges) {
      if (int(e.points.size()) != edge_m)
        throw std::invalid_argument("build_tokens: unexpected edge resolution");
      BBox b = e.bbox();
      std::vector<double> local = to_local_flat(e.points, b);
      std::vector<T> in(local.begin(), local.end());
      std::vector<T> lat = edge_vae->encode_mean(std::span<const T>(in));
      std::vector<double> tok;
      for (T v : lat) tok.push_back(double(v));
      for (double v : {b.x1, b.y1, b.z1, b.x2, b.y2, b.z2}) tok.push_back(v);
      for (double v : {e.start().x, e.start().y, e.start().z}) tok.push_back(v);
      for (double v : {e.end().x, e.end().y, e.end().z}) tok.push_back(v);
      etoks.push_back(std::move(tok));
      eboxes.push_back({b.x1, b.y1, b.z1, b.x2, b.y2, b.z2});
    }

    std::vector<int> eperm = order_tokens(eboxes);
    std::vector<int> sperm = order_tokens(sboxes);
    for (int i : eperm) tm.edge_tokens.push_back(std::move(etoks[i]));
    for (int i : sperm) tm.surf_tokens.push_back(std::move(stoks[i]));
    tm.adjacency.resize(eperm.size());
    for (size_t ei = 0; ei < eperm.size(); ++ei) {
      tm.adjacency[ei].resize(sperm.size());
      for (size_t si = 0; si < sperm.size(); ++si)
        tm.adjacency[ei][si] = model.adjacency[eperm[ei]][sperm[si]];
    }
    return tm;
  }

  DecodeFn surface_decoder() const {
    const Vae<T>* vae = surface_vae;
    return [vae](std::span<const double> latent) {
      std::vector<T> z(latent.begin(), latent.end());
      std::vector<T> out = vae->decode(std::span<const T>(z));
      return std::vector<double>(out.begin(), out.end());
    };
  }

  DecodeFn edge_decoder() const {
    const Vae<T>* vae = edge_vae;
    return [vae](std::span<const double> latent) {
      std::vector<T> z(latent.begin(), latent.end());
      std::vector<T> out = vae->decode(std::span<const T>(z));
      return std::vector<double>(out.begin(), out.end());
    };
  }
};

}  // namespace cmt
