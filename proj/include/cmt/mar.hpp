// Masked autoregressive network over continuous tokens: a bidirectional
// transformer reads a fixed-length condition prefix plus the token sequence
// (masked slots replaced by a learnable embedding), and its outputs at masked
// positions condition a per-token diffusion head. Generation iteratively
// unmasks balanced random slot groups. Sections allow one network to carry
// sequences of different token widths (used by the single-network ablation).
#pragma once

#include "cmt/diffusion.hpp"
#include "cmt/nn.hpp"

namespace cmt {

struct SectionSpec {
  int token_dim = 0;
  int length = 0;
};

struct MaskPlan {
  std::vector<uint8_t> masked;  // per slot, length L_total (one item)
  int count() const {
    int k = 0;
    for (auto m : masked) k += m ? 1 : 0;
    return k;
  }
};

// Draws k = round(r * L) masked slots, r uniform in [r_min, r_max]; always
// masks at least one slot.
inline MaskPlan random_mask_plan(int L, double r_min, double r_max, Rng& rng) {
  MaskPlan p;
  p.masked.assign(L, 0);
  double r = rng.uniform(r_min, r_max);
  int k = std::clamp(int(std::lround(r * L)), 1, L);
  std::vector<int> perm = rng.permutation(L);
  for (int i = 0; i < k; ++i) p.masked[perm[i]] = 1;
  return p;
}

// Balanced partition of a random permutation of the slots into n_steps groups
// whose sizes differ by at most one.
inline std::vector<std::vector<int>> unmask_groups(int L, int n_steps, Rng& rng) {
  n_steps = std::clamp(n_steps, 1, L);
  std::vector<int> perm = rng.permutation(L);
  std::vector<std::vector<int>> groups(n_steps);
  int base = L / n_steps, rem = L % n_steps;
  int pos = 0;
  for (int g = 0; g < n_steps; ++g) {
    int sz = base + (g < rem ? 1 : 0);
    groups[g].assign(perm.begin() + pos, perm.begin() + pos + sz);
    pos += sz;
  }
  return groups;
}

template <typename T>
struct MarNet {
  nn::ParamStore<T> ps;
  std::vector<SectionSpec> sections;
  std::vector<nn::Linear<T>> tok_proj;
  std::vector<DiffusionHead<T>> heads;
  nn::Linear<T> prefix_proj;  // cond_d -> width
  nn::ParamRef mask_embed;    // 1 x width
  nn::ParamRef pos_embed;     // (prefix_k + L_total) x width
  nn::Encoder<T> enc;
  DiffusionSchedule sched;
  int width = 0, prefix_k = 0, cond_d = 0, L_total = 0;

  int section_offset(int sec) const {
    int off = 0;
    for (int s = 0; s < sec; ++s) off += sections[s].length;
    return off;
  }
  int section_of(int slot) const {
    int off = 0;
    for (size_t s = 0; s < sections.size(); ++s) {
      if (slot < off + sections[s].length) return int(s);
      off += sections[s].length;
    }
    throw std::out_of_range("slot out of range");
  }

  void init(const std::vector<SectionSpec>& sections_, int width_, int depth, int n_heads,
            int prefix_k_, int cond_d_, int denoiser_hidden, int denoiser_layers,
            int diffusion_steps, bool predict_x0, Rng& rng) {
    sections = sections_;
    width = width_;
    prefix_k = prefix_k_;
    cond_d = cond_d_;
    L_total = 0;
    for (const auto& s : sections) L_total += s.length;

    tok_proj.resize(sections.size());
    heads.resize(sections.size());
    for (size_t s = 0; s < sections.size(); ++s) {
      tok_proj[s].init(ps, "tokproj" + std::to_string(s), sections[s].token_dim, width, rng);
      heads[s].init(ps, "head" + std::to_string(s), sections[s].token_dim, width, denoiser_hidden,
                    denoiser_layers, diffusion_steps, predict_x0, rng);
    }
    prefix_proj.init(ps, "prefix", cond_d, width, rng);
    mask_embed = ps.add("mask_embed", 1, width);
    ps.init_normal(mask_embed, rng, 0.02);
    pos_embed = ps.add("pos_embed", prefix_k + L_total, width);
    ps.init_normal(pos_embed, rng, 0.02);
    enc.init(ps, "enc", width, depth, n_heads, rng);
    sched = DiffusionSchedule::cosine(diffusion_steps);
  }

  // --- shared forward over prefix + sequence ---------------------------------

  struct ForwardCache {
    std::vector<Mat<T>> proj_tokens;  // per section [B*len x width]
    Mat<T> prefix_in;                 // [B*K x cond_d]
    Mat<T> proj_prefix;               // [B*K x width]
    Mat<T> x;                         // [B*(K+L) x width]
    typename nn::Encoder<T>::Cache encc;
    int B = 0;
  };

  // tokens: per section [B*len x dim]; masked: B*L_total (slot-major per item)
  Mat<T> forward(const Mat<T>& prefix, const std::vector<Mat<T>>& tokens,
                 const std::vector<uint8_t>& masked, int B, ForwardCache& c) const {
    if (int(masked.size()) != B * L_total) throw std::invalid_argument("mar: mask plan length mismatch");
    c.B = B;
    c.proj_tokens.resize(sections.size());
    for (size_t s = 0; s < sections.size(); ++s)
      c.proj_tokens[s] = tok_proj[s].forward(ps, tokens[s]);
    c.prefix_in = prefix;
    c.proj_prefix = prefix_proj.forward(ps, prefix);

    const int Lrow = prefix_k + L_total;
    c.x = Mat<T>(B * Lrow, width);
    const T* me = ps.ptr(mask_embed);
    const T* pe = ps.ptr(pos_embed);
    for (int b = 0; b < B; ++b) {
      for (int i = 0; i < prefix_k; ++i) {
        T* r = c.x.row(b * Lrow + i);
        const T* p = c.proj_prefix.row(b * prefix_k + i);
        const T* pp = pe + size_t(i) * width;
        for (int j = 0; j < width; ++j) r[j] = p[j] + pp[j];
      }
      for (int s = 0; s < L_total; ++s) {
        int sec = section_of(s);
        int local = s - section_offset(sec);
        T* r = c.x.row(b * Lrow + prefix_k + s);
        const T* pp = pe + size_t(prefix_k + s) * width;
        if (masked[b * L_total + s]) {
          for (int j = 0; j < width; ++j) r[j] = me[j] + pp[j];
        } else {
          const T* tv = c.proj_tokens[sec].row(b * sections[sec].length + local);
          for (int j = 0; j < width; ++j) r[j] = tv[j] + pp[j];
        }
      }
    }
    return enc.forward(ps, c.x, B, Lrow, c.encc);
  }

  // Backward for the encoder input construction. dH is the gradient at the
  // encoder output; returns dPrefix [B*K x cond_d].
  Mat<T> backward(const Mat<T>& dh, const std::vector<Mat<T>>& tokens,
                  const std::vector<uint8_t>& masked, const ForwardCache& c) {
    const int B = c.B;
    const int Lrow = prefix_k + L_total;
    Mat<T> dx = enc.backward(ps, dh, c.encc);

    T* pe_g = ps.grad(pos_embed);
    T* me_g = ps.grad(mask_embed);
    Mat<T> dprefix_rows(B * prefix_k, width);
    std::vector<Mat<T>> dtok(sections.size());
    for (size_t s = 0; s < sections.size(); ++s) {
      dtok[s] = Mat<T>(B * sections[s].length, width);
      dtok[s].zero();
    }
    for (int b = 0; b < B; ++b) {
      for (int i = 0; i < prefix_k; ++i) {
        const T* r = dx.row(b * Lrow + i);
        T* pg = pe_g + size_t(i) * width;
        for (int j = 0; j < width; ++j) pg[j] += r[j];
        std::copy(r, r + width, dprefix_rows.row(b * prefix_k + i));
      }
      for (int s = 0; s < L_total; ++s) {
        const T* r = dx.row(b * Lrow + prefix_k + s);
        T* pg = pe_g + size_t(prefix_k + s) * width;
        for (int j = 0; j < width; ++j) pg[j] += r[j];
        if (masked[b * L_total + s]) {
          for (int j = 0; j < width; ++j) me_g[j] += r[j];
        } else {
          int sec = section_of(s);
          int local = s - section_offset(sec);
          std::copy(r, r + width, dtok[sec].row(b * sections[sec].length + local));
        }
      }
    }
    for (size_t s = 0; s < sections.size(); ++s) tok_proj[s].backward(ps, tokens[s], dtok[s]);
    return prefix_proj.backward(ps, c.prefix_in, dprefix_rows);
  }

  // --- training loss over masked slots -----------------------------------------

  struct TrainPlan {
    int B = 0;
    std::vector<Mat<T>> tokens;   // per section, [B*len x dim], padded ground truth
    std::vector<uint8_t> masked;  // B * L_total
    std::vector<int> t;           // B * L_total (used at masked slots)
    std::vector<Mat<T>> eps;      // per section, [B*len x dim] (used at masked slots)
  };

  struct TrainResult {
    double loss = 0;                   // sum of per-section means
    std::vector<double> section_loss;  // per section
    Mat<T> dprefix;                    // [B*K x cond_d]
  };

  TrainResult train_loss(const Mat<T>& prefix, const TrainPlan& plan) {
    ForwardCache fc;
    Mat<T> h = forward(prefix, plan.tokens, plan.masked, plan.B, fc);
    const int Lrow = prefix_k + L_total;

    Mat<T> dh(h.rows, width);
    dh.zero();
    TrainResult res;
    res.section_loss.assign(sections.size(), 0.0);

    for (size_t sec = 0; sec < sections.size(); ++sec) {
      const int len = sections[sec].length;
      const int dim = sections[sec].token_dim;
      const int off = section_offset(int(sec));
      // gather masked rows of this section
      std::vector<int> rows;  // encoder row index
      std::vector<int> trow;
      for (int b = 0; b < plan.B; ++b)
        for (int i = 0; i < len; ++i) {
          int slot = off + i;
          if (!plan.masked[b * L_total + slot]) continue;
          rows.push_back(b * Lrow + prefix_k + slot);
          trow.push_back(b * len + i);
        }
      if (rows.empty()) continue;
      const int M = int(rows.size());
      Mat<T> x0(M, dim), eps(M, dim), c(M, width);
      std::vector<int> ts(M);
      for (int i = 0; i < M; ++i) {
        std::copy(plan.tokens[sec].row(trow[i]), plan.tokens[sec].row(trow[i]) + dim, x0.row(i));
        std::copy(plan.eps[sec].row(trow[i]), plan.eps[sec].row(trow[i]) + dim, eps.row(i));
        std::copy(h.row(rows[i]), h.row(rows[i]) + width, c.row(i));
        int b = rows[i] / Lrow;
        ts[i] = plan.t[b * L_total + (rows[i] % Lrow) - prefix_k];
      }
      auto lr = heads[sec].loss_and_grad(ps, x0, c, ts, eps, sched);
      res.section_loss[sec] = lr.loss;
      res.loss += lr.loss;
      for (int i = 0; i < M; ++i) {
        T* d = dh.row(rows[i]);
        const T* s = lr.dc.row(i);
        for (int j = 0; j < width; ++j) d[j] += s[j];
      }
    }
    res.dprefix = backward(dh, plan.tokens, plan.masked, fc);
    return res;
  }

  // --- generation -----------------------------------------------------------------

  // Iterative unmasking: a random permutation of slots split into n_steps
  // balanced groups; each step reveals its group via the diffusion head.
  std::vector<Mat<T>> generate(const Mat<T>& prefix, int n_steps, Rng& rng) const {
    std::vector<Mat<T>> tokens(sections.size());
    for (size_t s = 0; s < sections.size(); ++s) {
      tokens[s] = Mat<T>(sections[s].length, sections[s].token_dim);
      tokens[s].zero();
    }
    std::vector<uint8_t> masked(L_total, 1);
    auto groups = unmask_groups(L_total, n_steps, rng);
    const int Lrow = prefix_k + L_total;

    for (const auto& group : groups) {
      ForwardCache fc;
      Mat<T> h = forward(prefix, tokens, masked, 1, fc);
      for (int slot : group) {
        int sec = section_of(slot);
        int local = slot - section_offset(sec);
        std::vector<T> tok = heads[sec].sample(
            ps, std::span<const T>(h.row(prefix_k + slot), width), sched, rng);
        std::copy(tok.begin(), tok.end(), tokens[sec].row(local));
        masked[slot] = 0;
      }
      (void)Lrow;
    }
    return tokens;
  }
};

// Compresses a variable-length edge sequence plus the condition embedding into
// a fixed-length edge condition via self-attention over learnable query
// tokens appended to the sequence.
template <typename T>
struct EdgeProjector {
  nn::ParamStore<T> ps;
  nn::Linear<T> edge_proj;  // edge_dim -> d
  nn::ParamRef queries;     // k_q x d
  nn::ParamRef role;        // 3 x d: edge / condition / query
  nn::Encoder<T> enc;
  int d = 0, k_q = 0, edge_dim = 0;

  void init(int edge_dim_, int d_, int k_q_, int depth, int n_heads, Rng& rng) {
    edge_dim = edge_dim_;
    d = d_;
    k_q = k_q_;
    edge_proj.init(ps, "edgeproj", edge_dim, d, rng);
    queries = ps.add("queries", k_q, d);
    ps.init_normal(queries, rng, 0.02);
    role = ps.add("role", 3, d);
    ps.init_normal(role, rng, 0.02);
    enc.init(ps, "enc", d, depth, n_heads, rng);
  }

  struct Cache {
    Mat<T> edges_in;  // [n_e x edge_dim]
    Mat<T> proj;      // [n_e x d]
    Mat<T> x;         // [(n_e + K + k_q) x d]
    typename nn::Encoder<T>::Cache encc;
    int n_e = 0, K = 0;
  };

  // edge_tokens may be empty (condition-only). Z is [K x d].
  Mat<T> forward(const Mat<T>& edge_tokens, const Mat<T>& z, Cache& c) const {
    c.n_e = edge_tokens.rows;
    c.K = z.rows;
    c.edges_in = edge_tokens;
    const int L = c.n_e + c.K + k_q;
    c.x = Mat<T>(L, d);
    const T* rl = ps.ptr(role);
    if (c.n_e > 0) {
      c.proj = edge_proj.forward(ps, edge_tokens);
      for (int i = 0; i < c.n_e; ++i) {
        T* r = c.x.row(i);
        const T* p = c.proj.row(i);
        for (int j = 0; j < d; ++j) r[j] = p[j] + rl[j];
      }
    }
    for (int i = 0; i < c.K; ++i) {
      T* r = c.x.row(c.n_e + i);
      const T* p = z.row(i);
      for (int j = 0; j < d; ++j) r[j] = p[j] + rl[d + j];
    }
    const T* q = ps.ptr(queries);
    for (int i = 0; i < k_q; ++i) {
      T* r = c.x.row(c.n_e + c.K + i);
      for (int j = 0; j < d; ++j) r[j] = q[size_t(i) * d + j] + rl[2 * d + j];
    }
    Mat<T> h = enc.forward(ps, c.x, 1, L, c.encc);
    Mat<T> out(k_q, d);
    for (int i = 0; i < k_q; ++i)
      std::copy(h.row(c.n_e + c.K + i), h.row(c.n_e + c.K + i) + d, out.row(i));
    return out;
  }

  // Returns dZ; edge tokens are teacher-forced constants.
  Mat<T> backward(const Mat<T>& dq, const Cache& c) {
    const int L = c.n_e + c.K + k_q;
    Mat<T> dh(L, d);
    dh.zero();
    for (int i = 0; i < k_q; ++i)
      std::copy(dq.row(i), dq.row(i) + d, dh.row(c.n_e + c.K + i));
    Mat<T> dx = enc.backward(ps, dh, c.encc);

    T* rl_g = ps.grad(role);
    for (int i = 0; i < c.n_e; ++i)
      for (int j = 0; j < d; ++j) rl_g[j] += dx.at(i, j);
    for (int i = 0; i < c.K; ++i)
      for (int j = 0; j < d; ++j) rl_g[d + j] += dx.at(c.n_e + i, j);
    T* q_g = ps.grad(queries);
    for (int i = 0; i < k_q; ++i)
      for (int j = 0; j < d; ++j) {
        q_g[size_t(i) * d + j] += dx.at(c.n_e + c.K + i, j);
        rl_g[2 * d + j] += dx.at(c.n_e + c.K + i, j);
      }
    if (c.n_e > 0) {
      Mat<T> dproj(c.n_e, d);
      for (int i = 0; i < c.n_e; ++i) std::copy(dx.row(i), dx.row(i) + d, dproj.row(i));
      edge_proj.backward(ps, c.edges_in, dproj);
    }
    Mat<T> dz(c.K, d);
    for (int i = 0; i < c.K; ++i) std::copy(dx.row(c.n_e + i), dx.row(c.n_e + i) + d, dz.row(i));
    return dz;
  }
};

}  // namespace cmt
