#include "cmt/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "cmt/kernels.hpp"

namespace cmt {

namespace {

std::vector<double> flat(const PointSample& s) {
  std::vector<double> v;
  v.reserve(s.points.size() * 3);
  for (const auto& p : s.points) {
    v.push_back(p.x);
    v.push_back(p.y);
    v.push_back(p.z);
  }
  return v;
}

void nn(const PointSample& a, const PointSample& b, std::vector<double>& sq, std::vector<int>& idx) {
  if (a.points.empty() || b.points.empty()) throw std::invalid_argument("metrics: empty point sample");
  sq.resize(a.points.size());
  idx.resize(a.points.size());
  auto fa = flat(a), fb = flat(b);
  kern::nn_sqdist(fa.data(), int(a.points.size()), fb.data(), int(b.points.size()), sq.data(),
                  idx.data());
}

}  // namespace

double chamfer(const PointSample& a, const PointSample& b) {
  std::vector<double> sq;
  std::vector<int> idx;
  nn(a, b, sq, idx);
  double ab = 0;
  for (double d : sq) ab += std::sqrt(d);
  ab /= double(sq.size());
  nn(b, a, sq, idx);
  double ba = 0;
  for (double d : sq) ba += std::sqrt(d);
  ba /= double(sq.size());
  return ab + ba;
}

double f_score(const PointSample& a, const PointSample& b, double thr) {
  std::vector<double> sq;
  std::vector<int> idx;
  const double thr2 = thr * thr;
  nn(a, b, sq, idx);
  double precision = 0;
  for (double d : sq) precision += (d <= thr2) ? 1.0 : 0.0;
  precision /= double(sq.size());
  nn(b, a, sq, idx);
  double recall = 0;
  for (double d : sq) recall += (d <= thr2) ? 1.0 : 0.0;
  recall /= double(sq.size());
  if (precision + recall <= 0) return 0.0;
  return 100.0 * 2.0 * precision * recall / (precision + recall);
}

double normal_consistency(const PointSample& a, const PointSample& b) {
  std::vector<double> sq;
  std::vector<int> idx;
  nn(a, b, sq, idx);
  double acc = 0;
  for (size_t i = 0; i < idx.size(); ++i) acc += std::abs(dot(a.normals[i], b.normals[idx[i]]));
  acc /= double(idx.size());
  nn(b, a, sq, idx);
  double acc2 = 0;
  for (size_t i = 0; i < idx.size(); ++i) acc2 += std::abs(dot(b.normals[i], a.normals[idx[i]]));
  acc2 /= double(idx.size());
  return 100.0 * 0.5 * (acc + acc2);
}

DistributionalResult distributional(const std::vector<PointSample>& gen,
                                    const std::vector<PointSample>& ref) {
  if (gen.size() < 2 || ref.size() < 2)
    throw std::invalid_argument("distributional: need at least 2 models per set");

  const int ng = int(gen.size()), nr = int(ref.size());
  std::vector<double> d(size_t(ng) * nr);
  for (int i = 0; i < ng; ++i)
    for (int j = 0; j < nr; ++j) d[size_t(i) * nr + j] = chamfer(gen[i], ref[j]);

  std::vector<bool> covered(nr, false);
  for (int i = 0; i < ng; ++i) {
    int best = 0;
    for (int j = 1; j < nr; ++j)
      if (d[size_t(i) * nr + j] < d[size_t(i) * nr + best]) best = j;
    covered[best] = true;
  }
  DistributionalResult out;
  int ncov = 0;
  for (bool c : covered) ncov += c ? 1 : 0;
  out.cov = 100.0 * double(ncov) / double(nr);

  double mmd = 0;
  for (int j = 0; j < nr; ++j) {
    double best = d[j];
    for (int i = 1; i < ng; ++i) best = std::min(best, d[size_t(i) * nr + j]);
    mmd += best;
  }
  out.mmd = 100.0 * mmd / double(nr);

  // occupancy histograms over [-1,1]^3, aggregated across each set
  const int G = kJsdGrid;
  auto hist = [&](const std::vector<PointSample>& set) {
    std::vector<double> h(size_t(G) * G * G, 0.0);
    double total = 0;
    for (const auto& s : set)
      for (const auto& p : s.points) {
        auto bin = [&](double x) { return std::clamp(int((x + 1.0) * 0.5 * G), 0, G - 1); };
        h[(size_t(bin(p.x)) * G + bin(p.y)) * G + bin(p.z)] += 1.0;
        total += 1.0;
      }
    if (total > 0)
      for (auto& v : h) v /= total;
    return h;
  };
  auto hg = hist(gen), hr = hist(ref);
  double jsd = 0;
  for (size_t i = 0; i < hg.size(); ++i) {
    double m = 0.5 * (hg[i] + hr[i]);
    if (hg[i] > 0) jsd += 0.5 * hg[i] * std::log2(hg[i] / m);
    if (hr[i] > 0) jsd += 0.5 * hr[i] * std::log2(hr[i] / m);
  }
  out.jsd = 100.0 * jsd;
  return out;
}

NuvResult novel_unique_valid(const std::vector<BRepModel>& gen,
                             const std::unordered_set<uint64_t>& train_hashes, double eps,
                             int hash_bits) {
  NuvResult out;
  if (gen.empty()) return out;
  std::unordered_map<uint64_t, int> counts;
  std::vector<uint64_t> hashes;
  hashes.reserve(gen.size());
  int n_valid = 0, n_novel = 0;
  for (const auto& m : gen) {
    uint64_t h = m.surfaces.empty() ? 0 : quantize_hash(m, hash_bits);
    hashes.push_back(h);
    counts[h] += 1;
    if (!train_hashes.count(h)) n_novel += 1;
    if (validate_brep(m, eps).valid) n_valid += 1;
  }
  out.novel = 100.0 * double(n_novel) / double(gen.size());
  out.unique = 100.0 * double(counts.size()) / double(gen.size());
  out.valid = 100.0 * double(n_valid) / double(gen.size());
  return out;
}

}  // namespace cmt
