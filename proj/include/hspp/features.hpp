#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hspp/chunker.hpp"
#include "hspp/trace.hpp"

namespace hspp {

inline constexpr std::size_t kNumBaselineFeatures = 62;
inline constexpr std::size_t kNumMultimodalFeatures = 12;
inline constexpr std::size_t kNumTraceFeatures = kNumBaselineFeatures + kNumMultimodalFeatures;  // 74
inline constexpr std::size_t kNumChunkFeatures = 3;
inline constexpr std::size_t kNumInputs = kNumTraceFeatures + kNumChunkFeatures;  // 77

using FeatureVector = std::array<double, kNumInputs>;

// Pairwise shift metrics over flattened tensors.
namespace shift {

double cosine_similarity(std::span<const double> a, std::span<const double> b);
// 1 - cosine similarity; 0 when both vectors are zero, 1 when only one is.
double cosine_distance(std::span<const double> a, std::span<const double> b);
// L2 norm of the difference of per-column means of two (rows x cols) matrices.
double mean_shift_norm(std::span<const double> a, std::span<const double> b, std::size_t cols);
// 1-D Wasserstein-1 between the empirical value distributions (equal sizes).
double wasserstein1(std::span<const double> a, std::span<const double> b);
std::vector<double> softmax(std::span<const double> x);
// Natural-log Jensen-Shannon divergence, in [0, ln 2].
double js_divergence(std::span<const double> p, std::span<const double> q);
double entropy(std::span<const double> p);
// var(later) / var(earlier), clamped to [1e-6, 1e6].
double variance_ratio(std::span<const double> earlier, std::span<const double> later);
// Fraction of positions whose sign (x > 0) differs.
double sign_flip_rate(std::span<const double> a, std::span<const double> b);
// Divides by the total; throws Error(Range) on a zero or negative total.
std::vector<double> normalize(std::span<const double> w);

}  // namespace shift

// Baseline bank: hidden shift (30) | attention shift (20) | probability (12).
std::array<double, 30> hidden_shift_block(const GenerationTrace& trace);
std::array<double, 20> attention_shift_block(const GenerationTrace& trace);
std::array<double, 12> probability_block(std::span<const double> p_max);
std::array<double, kNumBaselineFeatures> baseline_features(const GenerationTrace& trace);

// Multimodal bank.
std::array<double, 2> layer_consistency(const GenerationTrace& trace);
// Concentration coefficient computed verbatim from the double-sum form
//   G = 2 * sum_i sum_{j<=i} s_j / (n * sum_i s_i) - 1
// over ascending-sorted weights. This equals 1/n minus the canonical Gini
// coefficient, so |G| is near 1 for concentrated weights and near 0 for
// uniform ones.
double concentration_coefficient(std::span<const double> weights);
std::array<double, 2> attention_concentration(const GenerationTrace& trace);
// {mean perplexity, perplexity sample std, confidence slope, mean confidence,
//  low-confidence fraction}
std::array<double, 5> confidence_features(std::span<const double> p_max);
// {URR, BRR, NUT}
std::array<double, 3> token_patterns(std::span<const std::string> tokens);
std::array<double, kNumMultimodalFeatures> multimodal_features(const GenerationTrace& trace);

struct FeatureToggles {
  bool baseline = true;
  bool multimodal = true;
};

// The 74 model-internal features; disabled banks are zero-filled so the
// schema stays fixed.
std::array<double, kNumTraceFeatures> trace_features(const GenerationTrace& trace,
                                                     const FeatureToggles& toggles = {});

std::array<double, kNumChunkFeatures> chunk_features(const SemanticChunk& chunk);
FeatureVector assemble_features(const std::array<double, kNumTraceFeatures>& trace_part,
                                const std::array<double, kNumChunkFeatures>& chunk_part);

// Index -> name for all 77 inputs.
const std::vector<std::string>& feature_names();
std::uint64_t feature_schema_hash();
// [{"index": 1, "name": ..., "block": ...}, ...] with 1-based indices.
nlohmann::json feature_schema_json();

}  // namespace hspp
