#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "hspp/common.hpp"
#include "hspp/features.hpp"

namespace hspp {
namespace {

const Tensor& hidden_at(const GenerationTrace& trace, int layer) {
  const auto it = trace.hidden.find(layer);
  if (it == trace.hidden.end()) {
    throw Error(ErrorKind::Invalid, "hidden layer " + std::to_string(layer) + " not recorded");
  }
  return it->second;
}

}  // namespace

std::array<double, 2> layer_consistency(const GenerationTrace& trace) {
  const int early = early_layer_index(trace.text_start, trace.num_layers);
  const int late = late_layer_index(trace.num_layers);
  const Tensor& he = hidden_at(trace, early);
  const Tensor& hl = hidden_at(trace, late);
  if (he.shape != hl.shape) throw Error(ErrorKind::Invalid, "early/late hidden shapes differ");
  const std::vector<double> a(he.values.begin(), he.values.end());
  const std::vector<double> b(hl.values.begin(), hl.values.end());
  const double c = (shift::cosine_similarity(a, b) + 1.0) / 2.0;
  return {c, 1.0 - c};
}

double concentration_coefficient(std::span<const double> weights) {
  if (weights.empty()) throw Error(ErrorKind::Invalid, "concentration of an empty layer");
  std::vector<double> s(weights.begin(), weights.end());
  std::sort(s.begin(), s.end());
  if (!(s.back() > 0)) throw Error(ErrorKind::Range, "attention weights sum to zero");
  // G is invariant to scaling the weights; dividing by the largest one makes
  // constant weights exactly 1 so the sums below stay exact integers.
  const double top = s.back();
  for (auto& v : s) v /= top;
  // sum_{i=1..n} sum_{j<=i} s_j, accumulated as running prefix sums
  double prefix = 0, nested = 0;
  for (double v : s) {
    prefix += v;
    nested += prefix;
  }
  if (!(prefix > 0)) throw Error(ErrorKind::Range, "attention weights sum to zero");
  const auto n = static_cast<double>(s.size());
  // Same quantity with the trailing "- 1" folded into the numerator.
  return (2.0 * nested - n * prefix) / (n * prefix);
}

std::array<double, 2> attention_concentration(const GenerationTrace& trace) {
  if (trace.attention.size() < 3) throw Error(ErrorKind::Invalid, "need the last 3 attention layers");
  std::vector<double> magnitudes;
  auto it = trace.attention.end();
  for (int k = 0; k < 3; ++k) {
    --it;
    const std::vector<double> w(it->second.values.begin(), it->second.values.end());
    magnitudes.push_back(std::abs(concentration_coefficient(w)));
  }
  std::reverse(magnitudes.begin(), magnitudes.end());
  return {stats::mean(magnitudes), stats::pstdev(magnitudes)};
}

std::array<double, 5> confidence_features(std::span<const double> p) {
  if (p.empty()) throw Error(ErrorKind::Invalid, "confidence features need at least one token");
  const std::size_t T = p.size();
  std::vector<double> ppl(T);
  std::size_t low = 0;
  for (std::size_t t = 0; t < T; ++t) {
    if (!(p[t] > 0.0)) throw Error(ErrorKind::Range, "p_max must be positive");
    ppl[t] = 1.0 / p[t];
    low += p[t] < 0.5;
  }
  const auto n = static_cast<double>(T);
  const double f1 = stats::mean(ppl);

  double f2 = 0;
  if (T > 1) {
    double acc = 0;
    for (double v : ppl) acc += (v - f1) * (v - f1);
    f2 = std::sqrt(acc / (n - 1));
  }

  double f3 = 0;
  if (T > 1) {
    double sx = 0, sy = 0, sxy = 0, sxx = 0;
    for (std::size_t t = 0; t < T; ++t) {
      const auto x = static_cast<double>(t);  // (t - 1) for 1-based t
      sx += x;
      sy += p[t];
      sxy += x * p[t];
      sxx += x * x;
    }
    f3 = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }

  return {f1, f2, f3, stats::mean(p), static_cast<double>(low) / n};
}

std::array<double, 3> token_patterns(std::span<const std::string> tokens) {
  if (tokens.empty()) throw Error(ErrorKind::Invalid, "token patterns need at least one token");
  const std::set<std::string_view> unique(tokens.begin(), tokens.end());
  const double nut = static_cast<double>(unique.size()) / static_cast<double>(tokens.size());

  double brr = 0;
  if (tokens.size() > 1) {
    std::set<std::pair<std::string_view, std::string_view>> bigrams;
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) bigrams.emplace(tokens[i], tokens[i + 1]);
    brr = 1.0 - static_cast<double>(bigrams.size()) / static_cast<double>(tokens.size() - 1);
  }
  return {1.0 - nut, brr, nut};
}

std::array<double, kNumMultimodalFeatures> multimodal_features(const GenerationTrace& trace) {
  std::array<double, kNumMultimodalFeatures> out{};
  const auto lcf = layer_consistency(trace);
  const auto acf = attention_concentration(trace);
  const std::vector<double> p(trace.p_max.begin(), trace.p_max.end());
  const auto conf = confidence_features(p);
  const auto tok = token_patterns(trace.token_strings);
  auto dst = std::copy(lcf.begin(), lcf.end(), out.begin());
  dst = std::copy(acf.begin(), acf.end(), dst);
  dst = std::copy(conf.begin(), conf.end(), dst);
  std::copy(tok.begin(), tok.end(), dst);
  return out;
}

std::array<double, kNumTraceFeatures> trace_features(const GenerationTrace& trace, const FeatureToggles& toggles) {
  std::array<double, kNumTraceFeatures> out{};
  if (toggles.baseline) {
    const auto b = baseline_features(trace);
    std::copy(b.begin(), b.end(), out.begin());
  }
  if (toggles.multimodal) {
    const auto m = multimodal_features(trace);
    std::copy(m.begin(), m.end(), out.begin() + kNumBaselineFeatures);
  }
  return out;
}

std::array<double, kNumChunkFeatures> chunk_features(const SemanticChunk& chunk) {
  return {static_cast<double>(chunk.cwc), static_cast<double>(chunk.cpi), chunk.crp};
}

FeatureVector assemble_features(const std::array<double, kNumTraceFeatures>& trace_part,
                                const std::array<double, kNumChunkFeatures>& chunk_part) {
  FeatureVector v{};
  std::copy(trace_part.begin(), trace_part.end(), v.begin());
  std::copy(chunk_part.begin(), chunk_part.end(), v.begin() + kNumTraceFeatures);
  return v;
}

}  // namespace hspp
