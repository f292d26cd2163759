// Central finite-difference gradient checking used across the test suites.
// Test-only: independent of the backward passes it verifies.
#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "cmt/nn.hpp"
#include "cmt/rng.hpp"

namespace cmt::testing {

struct GradCheckResult {
  double max_rel_err = 0.0;
  int probes = 0;
};

// loss must recompute the full forward pass from the current parameters.
// Analytic gradients must already be accumulated in ps.g. Probes n_probes
// random parameter entries with central differences.
inline GradCheckResult gradcheck(nn::ParamStore<double>& ps,
                                 const std::function<double()>& loss, int n_probes, Rng& rng,
                                 double h = 1e-5) {
  GradCheckResult res;
  if (ps.w.empty()) return res;
  for (int p = 0; p < n_probes; ++p) {
    size_t i = size_t(rng.uniform_int(int(ps.w.size())));
    double saved = ps.w[i];
    ps.w[i] = saved + h;
    double lp = loss();
    ps.w[i] = saved - h;
    double lm = loss();
    ps.w[i] = saved;
    double fd = (lp - lm) / (2.0 * h);
    double an = ps.g[i];
    if (std::abs(fd) < 1e-7 && std::abs(an) < 1e-7) continue;  // vacuously zero gradient
    double rel = std::abs(fd - an) / std::max(std::abs(fd), std::abs(an));
    res.max_rel_err = std::max(res.max_rel_err, rel);
    res.probes += 1;
  }
  return res;
}

// Probes only the entries of one named parameter block.
inline GradCheckResult gradcheck_block(nn::ParamStore<double>& ps, const std::string& name,
                                       const std::function<double()>& loss, int n_probes,
                                       Rng& rng, double h = 1e-5) {
  GradCheckResult res;
  for (const auto& e : ps.entries) {
    if (e.name.rfind(name, 0) != 0) continue;
    for (int p = 0; p < n_probes; ++p) {
      size_t i = e.ref.off + size_t(rng.uniform_int(int(e.ref.size())));
      double saved = ps.w[i];
      ps.w[i] = saved + h;
      double lp = loss();
      ps.w[i] = saved - h;
      double lm = loss();
      ps.w[i] = saved;
      double fd = (lp - lm) / (2.0 * h);
      double an = ps.g[i];
      if (std::abs(fd) < 1e-7 && std::abs(an) < 1e-7) continue;
      res.max_rel_err = std::max(res.max_rel_err, std::abs(fd - an) / std::max(std::abs(fd), std::abs(an)));
      res.probes += 1;
    }
    return res;  // first matching block
  }
  return res;
}

}  // namespace cmt::testing
