// Generative and reconstruction metrics: Chamfer / F-score / normal
// consistency per model pair, COV / MMD / JSD per set, and the Novel / Unique
// / Valid ratios over generated models.
#pragma once

#include <unordered_set>
#include <vector>

#include "cmt/brep.hpp"

namespace cmt {

// Symmetric chamfer distance: mean nearest-neighbor distance A->B plus B->A.
double chamfer(const PointSample& a, const PointSample& b);

// F-score at distance threshold thr, in percent.
double f_score(const PointSample& a, const PointSample& b, double thr = 0.02);

// Mean |cos| between nearest-neighbor-matched normals (both directions), in percent.
double normal_consistency(const PointSample& a, const PointSample& b);

struct DistributionalResult {
  double cov = 0;  // percent of reference models that are someone's nearest neighbor
  double mmd = 0;  // mean over reference of min chamfer to generated, x100
  double jsd = 0;  // Jensen-Shannon divergence (log2) of occupancy histograms, x100
};

// Occupancy histogram grid resolution and JSD log base are fixed here for
// reproducibility; JSD uses log2 so the raw value lies in [0,1].
constexpr int kJsdGrid = 28;

DistributionalResult distributional(const std::vector<PointSample>& gen,
                                    const std::vector<PointSample>& ref);

struct NuvResult {
  double novel = 0, unique = 0, valid = 0;  // percentages
};

// Hashes are quantize_hash digests; validity via validate_brep at eps.
NuvResult novel_unique_valid(const std::vector<BRepModel>& gen,
                             const std::unordered_set<uint64_t>& train_hashes,
                             double eps = kVertexEps, int hash_bits = 6);

}  // namespace cmt
