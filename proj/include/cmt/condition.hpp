// Unified multimodal condition encoder: modality-specific tokenizers (text
// vocabulary lookup, image patch flattening, point-cloud voxel convolution),
// a shared transformer encoder, and a learnable-query projector producing the
// fixed-length condition embedding Z. The null condition is a learned Z used
// for unconditional generation.
#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <variant>

#include "cmt/brep.hpp"
#include "cmt/image.hpp"
#include "cmt/nn.hpp"
#include "cmt/synth.hpp"

namespace cmt {

struct TextCondition {
  std::string text;
};
struct ImageCondition {
  Image image;  // RGBA, square, transparent background
};
struct PointsCondition {
  PointSample points;  // coords in [-1,1]^3 with unit normals
};
struct NullCondition {};

using Condition = std::variant<NullCondition, TextCondition, ImageCondition, PointsCondition>;

struct CondConfig {
  int k = 8;            // condition embedding rows
  int d = 64;           // width
  int depth = 2;
  int heads = 4;
  int voxel_grid = 16;  // G
  int image_size = 32;
  int patch = 8;
  int text_max_tokens = 8;
};

inline std::vector<std::string> text_vocab() {
  std::vector<std::string> v = {"<unk>"};
  for (const auto& w : caption_vocabulary()) v.push_back(w);
  return v;
}

inline std::vector<int> tokenize_text(const std::string& text, int max_tokens) {
  static const std::vector<std::string> vocab = text_vocab();
  std::string lowered;
  for (char ch : text) lowered += char(std::tolower(static_cast<unsigned char>(ch)));
  std::istringstream ss(lowered);
  std::string w;
  std::vector<int> ids;
  while (ss >> w && int(ids.size()) < max_tokens) {
    int id = 0;  // <unk>
    for (size_t i = 0; i < vocab.size(); ++i)
      if (vocab[i] == w) {
        id = int(i);
        break;
      }
    ids.push_back(id);
  }
  if (ids.empty()) throw std::invalid_argument("tokenize: empty text condition");
  return ids;
}

template <typename T>
struct CondEncoder {
  nn::ParamStore<T> ps;
  CondConfig cfg;

  nn::ParamRef text_embed;  // vocab x d
  nn::ParamRef text_pos;    // text_max_tokens x d
  nn::Linear<T> img_patch;  // patch*patch*4 -> d
  nn::ParamRef img_pos;     // (image_size/patch)^2 x d
  nn::Linear<T> pc_conv;    // 4 * 4^3 -> d (stride-4 conv over the voxel grid)
  nn::ParamRef pc_pos;      // (G/4)^3 x d
  nn::ParamRef modality;    // 3 x d: text / image / points
  nn::Encoder<T> enc;
  nn::ParamRef queries;  // k x d
  nn::CrossBlock<T> projector;
  nn::ParamRef null_z;  // k x d

  void init(const CondConfig& cfg_, Rng& rng) {
    cfg = cfg_;
    const int vocab = int(text_vocab().size());
    text_embed = ps.add("text_embed", vocab, cfg.d);
    ps.init_normal(text_embed, rng, 0.02);
    text_pos = ps.add("text_pos", cfg.text_max_tokens, cfg.d);
    ps.init_normal(text_pos, rng, 0.02);
    img_patch.init(ps, "img_patch", cfg.patch * cfg.patch * 4, cfg.d, rng);
    const int n_img = (cfg.image_size / cfg.patch) * (cfg.image_size / cfg.patch);
    img_pos = ps.add("img_pos", n_img, cfg.d);
    ps.init_normal(img_pos, rng, 0.02);
    pc_conv.init(ps, "pc_conv", 4 * 64, cfg.d, rng);
    const int g4 = cfg.voxel_grid / 4;
    pc_pos = ps.add("pc_pos", g4 * g4 * g4, cfg.d);
    ps.init_normal(pc_pos, rng, 0.02);
    modality = ps.add("modality", 3, cfg.d);
    ps.init_normal(modality, rng, 0.02);
    enc.init(ps, "enc", cfg.d, cfg.depth, cfg.heads, rng);
    queries = ps.add("queries", cfg.k, cfg.d);
    ps.init_normal(queries, rng, 0.02);
    projector.init(ps, "proj", cfg.d, cfg.heads, rng);
    null_z = ps.add("null_z", cfg.k, cfg.d);
    ps.init_normal(null_z, rng, 0.02);
  }

  // --- modality tokenizers: (token features, modality id, aux indices) --------

  struct Tokens {
    Mat<T> feats;           // [n x in_dim] raw features before the input map
    std::vector<int> ids;   // text token ids (text only)
    int modality_id = 0;    // 0 text, 1 image, 2 points
    int count = 0;
  };

  Tokens tokenize(const Condition& cond) const {
    Tokens tk;
    if (const auto* t = std::get_if<TextCondition>(&cond)) {
      tk.modality_id = 0;
      tk.ids = tokenize_text(t->text, cfg.text_max_tokens);
      tk.count = int(tk.ids.size());
      return tk;
    }
    if (const auto* im = std::get_if<ImageCondition>(&cond)) {
      const Image& img = im->image;
      if (img.width != img.height) throw std::invalid_argument("tokenize: image must be square");
      if (img.width != cfg.image_size)
        throw std::invalid_argument("tokenize: expected image size " + std::to_string(cfg.image_size));
      tk.modality_id = 1;
      const int p = cfg.patch, np = cfg.image_size / p;
      tk.count = np * np;
      tk.feats = Mat<T>(tk.count, p * p * 4);
      for (int py = 0; py < np; ++py)
        for (int px = 0; px < np; ++px) {
          T* row = tk.feats.row(py * np + px);
          int idx = 0;
          for (int y = 0; y < p; ++y)
            for (int x = 0; x < p; ++x) {
              const uint8_t* q = img.pixel(px * p + x, py * p + y);
              for (int ch = 0; ch < 4; ++ch) row[idx++] = T(q[ch] / 255.0 * 2.0 - 1.0);
            }
        }
      return tk;
    }
    if (const auto* pc = std::get_if<PointsCondition>(&cond)) {
      if (pc->points.points.empty()) throw std::invalid_argument("tokenize: empty point cloud");
      tk.modality_id = 2;
      const int G = cfg.voxel_grid;
      // occupancy + mean normal per voxel
      std::vector<double> occ(size_t(G) * G * G, 0.0);
      std::vector<Point3> nsum(size_t(G) * G * G, Point3{0, 0, 0});
      auto bin = [&](double x) { return std::clamp(int((x + 1.0) * 0.5 * G), 0, G - 1); };
      for (size_t i = 0; i < pc->points.points.size(); ++i) {
        const Point3& p = pc->points.points[i];
        size_t v = (size_t(bin(p.x)) * G + bin(p.y)) * G + bin(p.z);
        occ[v] += 1.0;
        nsum[v] += pc->points.normals[i];
      }
      const int g4 = G / 4;
      tk.count = g4 * g4 * g4;
      tk.feats = Mat<T>(tk.count, 4 * 64);
      for (int bx = 0; bx < g4; ++bx)
        for (int by = 0; by < g4; ++by)
          for (int bz = 0; bz < g4; ++bz) {
            T* row = tk.feats.row((bx * g4 + by) * g4 + bz);
            int idx = 0;
            for (int x = 0; x < 4; ++x)
              for (int y = 0; y < 4; ++y)
                for (int z = 0; z < 4; ++z) {
                  size_t v = (size_t(bx * 4 + x) * G + by * 4 + y) * G + bz * 4 + z;
                  Point3 mn =
                      occ[v] > 0 ? nsum[v] * (1.0 / occ[v]) : Point3{0, 0, 0};
                  row[idx++] = T(occ[v] > 0 ? 1.0 : 0.0);
                  row[idx++] = T(mn.x);
                  row[idx++] = T(mn.y);
                  row[idx++] = T(mn.z);
                }
          }
      return tk;
    }
    throw std::invalid_argument("tokenize: null condition has no tokens");
  }

  struct Cache {
    Tokens tk;
    Mat<T> x;  // encoder input [n x d]
    typename nn::Encoder<T>::Cache encc;
    Mat<T> h;   // encoder output
    Mat<T> q0;  // query rows
    typename nn::CrossBlock<T>::Cache projc;
    bool is_null = false;
  };

  // Z = F(C): [k x d]. The null condition returns the stored learned Z.
  Mat<T> encode(const Condition& cond, Cache& c) const {
    if (std::holds_alternative<NullCondition>(cond)) {
      c.is_null = true;
      Mat<T> z(cfg.k, cfg.d);
      const T* nz = ps.ptr(null_z);
      std::copy(nz, nz + z.size(), z.a.begin());
      return z;
    }
    c.is_null = false;
    c.tk = tokenize(cond);
    const int n = c.tk.count;
    c.x = Mat<T>(n, cfg.d);
    const T* mod = ps.ptr(modality) + size_t(c.tk.modality_id) * cfg.d;
    if (c.tk.modality_id == 0) {
      const T* te = ps.ptr(text_embed);
      const T* tp = ps.ptr(text_pos);
      for (int i = 0; i < n; ++i) {
        T* r = c.x.row(i);
        const T* e = te + size_t(c.tk.ids[i]) * cfg.d;
        const T* p = tp + size_t(i) * cfg.d;
        for (int j = 0; j < cfg.d; ++j) r[j] = e[j] + p[j] + mod[j];
      }
    } else {
      const nn::Linear<T>& in_map = c.tk.modality_id == 1 ? img_patch : pc_conv;
      nn::ParamRef pos = c.tk.modality_id == 1 ? img_pos : pc_pos;
      Mat<T> mapped = in_map.forward(ps, c.tk.feats);
      const T* pp = ps.ptr(pos);
      for (int i = 0; i < n; ++i) {
        T* r = c.x.row(i);
        const T* m = mapped.row(i);
        const T* p = pp + size_t(i) * cfg.d;
        for (int j = 0; j < cfg.d; ++j) r[j] = m[j] + p[j] + mod[j];
      }
    }
    c.h = enc.forward(ps, c.x, 1, n, c.encc);
    c.q0 = Mat<T>(cfg.k, cfg.d);
    const T* q = ps.ptr(queries);
    std::copy(q, q + c.q0.size(), c.q0.a.begin());
    return projector.forward(ps, c.q0, c.h, 1, cfg.k, n, c.projc);
  }

  void backward(const Mat<T>& dz, const Cache& c) {
    if (c.is_null) {
      T* g = ps.grad(null_z);
      for (size_t i = 0; i < dz.size(); ++i) g[i] += dz.a[i];
      return;
    }
    auto [dq0, dh] = projector.backward(ps, dz, c.projc);
    T* qg = ps.grad(queries);
    for (size_t i = 0; i < dq0.size(); ++i) qg[i] += dq0.a[i];
    Mat<T> dx = enc.backward(ps, dh, c.encc);

    const int n = c.tk.count;
    T* mod_g = ps.grad(modality) + size_t(c.tk.modality_id) * cfg.d;
    if (c.tk.modality_id == 0) {
      T* te_g = ps.grad(text_embed);
      T* tp_g = ps.grad(text_pos);
      for (int i = 0; i < n; ++i) {
        const T* r = dx.row(i);
        T* e = te_g + size_t(c.tk.ids[i]) * cfg.d;
        T* p = tp_g + size_t(i) * cfg.d;
        for (int j = 0; j < cfg.d; ++j) {
          e[j] += r[j];
          p[j] += r[j];
          mod_g[j] += r[j];
        }
      }
    } else {
      nn::Linear<T>& in_map = c.tk.modality_id == 1 ? img_patch : pc_conv;
      nn::ParamRef pos = c.tk.modality_id == 1 ? img_pos : pc_pos;
      T* pp_g = ps.grad(pos);
      for (int i = 0; i < n; ++i) {
        const T* r = dx.row(i);
        T* p = pp_g + size_t(i) * cfg.d;
        for (int j = 0; j < cfg.d; ++j) {
          p[j] += r[j];
          mod_g[j] += r[j];
        }
      }
      in_map.backward(ps, c.tk.feats, dx);
    }
  }
};

}  // namespace cmt
