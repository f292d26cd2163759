// Surface / edge variational autoencoders over local-frame geometry. MLP
// encoder to (mu, logvar), MLP decoder back to the flattened grid / polyline.
// Inference encoding is the posterior mean.
#pragma once

#include <span>

#include "cmt/nn.hpp"

namespace cmt {

template <typename T>
struct Vae {
  nn::ParamStore<T> ps;
  nn::Mlp<T> encoder;  // input_dim -> hidden x2 -> 2*latent
  nn::Mlp<T> decoder;  // latent -> hidden x2 -> input_dim
  int input_dim = 0, latent_dim = 0, hidden = 0;
  double beta = 1e-3;

  void init(int input_dim_, int latent_dim_, int hidden_, double beta_, Rng& rng) {
    input_dim = input_dim_;
    latent_dim = latent_dim_;
    hidden = hidden_;
    beta = beta_;
    encoder.init(ps, "enc", input_dim, hidden, 2, 2 * latent_dim, rng);
    decoder.init(ps, "dec", latent_dim, hidden, 2, input_dim, rng);
  }

  struct StepResult {
    double loss = 0, recon = 0, kl = 0;
  };

  // One forward/backward pass over a batch (rows = flattened samples).
  // Per-sample ELBO reduction: recon sums squared error over elements and kl
  // sums over latent dims, both averaged over the batch, so beta weighs the
  // KL against the full per-sample reconstruction. Gradients accumulate into
  // ps.g.
  StepResult loss_and_grad(const Mat<T>& x, Rng& rng) {
    const int B = x.rows;
    typename nn::Mlp<T>::Cache ecache, dcache;
    Mat<T> stats = encoder.forward(ps, x, ecache);
    check_finite(stats, "vae encoder output");

    Mat<T> z(B, latent_dim), eps(B, latent_dim);
    for (int i = 0; i < B; ++i)
      for (int j = 0; j < latent_dim; ++j) {
        T mu = stats.at(i, j);
        T logvar = stats.at(i, latent_dim + j);
        T e = T(rng.normal());
        eps.at(i, j) = e;
        z.at(i, j) = mu + T(std::exp(0.5 * double(logvar))) * e;
      }

    Mat<T> xhat = decoder.forward(ps, z, dcache);
    check_finite(xhat, "vae decoder output");

    StepResult res;
    Mat<T> dxhat(B, input_dim);
    for (size_t i = 0; i < xhat.size(); ++i) {
      double d = double(xhat.a[i]) - double(x.a[i]);
      res.recon += d * d;
      dxhat.a[i] = T(2.0 * d / B);
    }
    res.recon /= B;

    Mat<T> dz = decoder.backward(ps, dxhat, dcache);

    // kl = 0.5 sum(mu^2 + e^lv - 1 - lv), averaged over batch
    Mat<T> dstats(B, 2 * latent_dim);
    for (int i = 0; i < B; ++i)
      for (int j = 0; j < latent_dim; ++j) {
        double mu = double(stats.at(i, j));
        double lv = double(stats.at(i, latent_dim + j));
        double ev = std::exp(lv);
        res.kl += 0.5 * (mu * mu + ev - 1.0 - lv);
        double sigma = std::exp(0.5 * lv);
        double dzv = double(dz.at(i, j));
        dstats.at(i, j) = T(dzv + beta * mu / B);
        dstats.at(i, latent_dim + j) =
            T(dzv * double(eps.at(i, j)) * 0.5 * sigma + beta * 0.5 * (ev - 1.0) / B);
      }
    res.kl /= B;
    encoder.backward(ps, dstats, ecache);

    res.loss = res.recon + beta * res.kl;
    if (!std::isfinite(res.loss)) throw std::runtime_error("vae: non-finite loss");
    return res;
  }

  // Deterministic: returns the posterior mean.
  std::vector<T> encode_mean(std::span<const T> x) const {
    Mat<T> in(1, input_dim);
    std::copy(x.begin(), x.end(), in.a.begin());
    typename nn::Mlp<T>::Cache c;
    Mat<T> stats = encoder.forward(ps, in, c);
    return std::vector<T>(stats.a.begin(), stats.a.begin() + latent_dim);
  }

  std::vector<T> decode(std::span<const T> z) const {
    Mat<T> in(1, latent_dim);
    std::copy(z.begin(), z.end(), in.a.begin());
    typename nn::Mlp<T>::Cache c;
    Mat<T> out = decoder.forward(ps, in, c);
    check_finite(out, "vae decode");
    return out.a;
  }

  // Batched posterior means, one row per sample.
  Mat<T> encode_mean_batch(const Mat<T>& x) const {
    typename nn::Mlp<T>::Cache c;
    Mat<T> stats = encoder.forward(ps, x, c);
    Mat<T> mu(x.rows, latent_dim);
    for (int i = 0; i < x.rows; ++i)
      std::copy(stats.row(i), stats.row(i) + latent_dim, mu.row(i));
    return mu;
  }
};

}  // namespace cmt
