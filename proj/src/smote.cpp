#include <algorithm>
#include <numeric>

#include "hspp/membership.hpp"
#include "hspp/synth.hpp"

namespace hspp {

std::map<HallucinationLabel, double> class_weights(std::span<const LabeledExample> data) {
  std::map<HallucinationLabel, std::size_t> counts;
  for (const auto& e : data) ++counts[e.y];
  std::map<HallucinationLabel, double> out;
  const auto n = static_cast<double>(data.size());
  const auto k = static_cast<double>(counts.size());
  for (const auto& [label, count] : counts) out[label] = n / (k * static_cast<double>(count));
  return out;
}

std::vector<LabeledExample> smote_oversample(std::span<const LabeledExample> data, int k, std::uint64_t seed) {
  if (k < 1) throw Error(ErrorKind::Invalid, "SMOTE needs k >= 1");
  std::map<HallucinationLabel, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < data.size(); ++i) members[data[i].y].push_back(i);

  std::size_t majority = 0;
  for (const auto& [label, idx] : members) majority = std::max(majority, idx.size());

  std::vector<LabeledExample> out(data.begin(), data.end());
  for (const auto& [label, idx] : members) {
    const std::size_t n = idx.size();
    if (n == majority) continue;
    if (n < 2) {
      throw Error(ErrorKind::Invalid, "SMOTE: class " + std::string(to_string(label)) + " has a single example");
    }
    const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), n - 1);

    // k nearest same-class neighbors per member, brute force.
    std::vector<std::vector<std::size_t>> neighbors(n);
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t a = 0; a < n; ++a) {
      const auto& xa = data[idx[a]].x;
      for (std::size_t b = 0; b < n; ++b) {
        double d = 0;
        if (a != b) {
          const auto& xb = data[idx[b]].x;
          for (std::size_t f = 0; f < kNumInputs; ++f) d += (xa[f] - xb[f]) * (xa[f] - xb[f]);
        }
        dist[b] = {a == b ? std::numeric_limits<double>::infinity() : d, b};
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
      for (std::size_t j = 0; j < kk; ++j) neighbors[a].push_back(dist[j].second);
    }

    Rng rng(derive_seed(seed, std::string("smote/") + std::string(to_string(label))));
    for (std::size_t s = 0; s < majority - n; ++s) {
      const std::size_t a = s % n;  // round-robin over the real members
      const std::size_t b = neighbors[a][rng.index(kk)];
      const double u = rng.uniform();
      const auto& base = data[idx[a]];
      const auto& nn = data[idx[b]];
      LabeledExample synth;
      synth.sample_id = base.sample_id + "#smote";
      synth.y = label;
      for (std::size_t f = 0; f < kNumInputs; ++f) synth.x[f] = base.x[f] + u * (nn.x[f] - base.x[f]);
      out.push_back(std::move(synth));
    }
  }
  return out;
}

}  // namespace hspp
