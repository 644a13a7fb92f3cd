#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hspp/annotation.hpp"
#include "hspp/chunker.hpp"
#include "hspp/common.hpp"
#include "hspp/gt_matcher.hpp"
#include "hspp/membership.hpp"

namespace hspp {

// Twice the Mann-Whitney U statistic (ties count 1/2, so 2U is an integer).
double mann_whitney_u2(std::span<const double> scores, const std::vector<bool>& positive);

// Probability that a random positive outranks a random negative.
double auc_roc(std::span<const double> scores, const std::vector<bool>& positive);

struct Prediction {
  std::string sample_id;
  HallucinationLabel truth = HallucinationLabel::Correct;
  ClassProbabilities probs{};

  HallucinationLabel predicted() const;
};

struct ClassMetrics {
  double precision = 0, recall = 0, f1 = 0;
  std::size_t support = 0;
};

struct EvalReport {
  double binary_auc = 0;  // CORRECT vs any hallucination, score 1 - P(CORRECT)
  double macro_auc = 0;   // one-vs-rest, averaged over classes with both sides present
  double precision = 0;   // macro
  double recall = 0;      // macro
  double macro_f1 = 0;
  double weighted_f1 = 0;
  std::array<ClassMetrics, kNumClasses> per_class{};
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> confusion{};  // [truth][predicted]
  std::vector<std::pair<std::string, double>> importance;
  nlohmann::json config = nlohmann::json::object();

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
  std::string render() const;
};

// Needs both binary classes among the truths.
EvalReport evaluate(std::span<const Prediction> predictions);

std::vector<Prediction> predict(const MembershipModel& model, std::span<const LabeledExample> data);

std::string format_predictions(std::span<const Prediction> predictions);
std::vector<Prediction> parse_predictions(const std::string& text);

using Metric = std::function<double(std::span<const ClassProbabilities>, std::span<const HallucinationLabel>)>;

// Binary AUC of 1 - P(CORRECT) against "label != CORRECT".
double binary_auc_metric(std::span<const ClassProbabilities> probs, std::span<const HallucinationLabel> truth);

struct ImportanceOptions {
  int repeats = 10;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0 = hardware concurrency
};

// Delta_f = metric(original) - mean over repeats of metric with column f
// shuffled. Sorted by descending delta; ties keep feature order.
std::vector<std::pair<std::string, double>> permutation_importance(const MembershipModel& model,
                                                                   std::span<const LabeledExample> data,
                                                                   const Metric& metric,
                                                                   const ImportanceOptions& options);

enum class ChunkStrategy { NoChunking, Sentence, ObjectOnly, ObjectAttribute, Complete };

inline constexpr std::array<ChunkStrategy, 5> kAllStrategies = {
    ChunkStrategy::NoChunking, ChunkStrategy::Sentence, ChunkStrategy::ObjectOnly,
    ChunkStrategy::ObjectAttribute, ChunkStrategy::Complete};

std::string_view to_string(ChunkStrategy strategy);
std::optional<ChunkStrategy> parse_strategy(std::string_view name);

// A scoring unit under one chunking strategy. Coarse units (whole text,
// sentence) inherit the most severe label of the semantic chunks they hold.
struct ContextUnit {
  int start = 0, end = 0;
  std::array<double, kNumChunkFeatures> features{};
  HallucinationLabel label = HallucinationLabel::Correct;
};

std::vector<ContextUnit> strategy_units(const AnnotatedText& description, const GroundTruthSet& gt,
                                        const Lexicons& lex, const StopwordList& stopwords,
                                        ChunkStrategy strategy);

// One sample prepared for the ablation: its trace features, its reference
// claims (the complete semantic chunks, labeled) and its scoring units under
// every strategy, indexed like kAllStrategies.
struct AblationSample {
  std::string sample_id;
  std::array<double, kNumTraceFeatures> trace_features{};
  std::vector<ContextUnit> claims;
  std::array<std::vector<ContextUnit>, kAllStrategies.size()> units;
};

AblationSample make_ablation_sample(std::string sample_id, const std::array<double, kNumTraceFeatures>& trace_features,
                                    const AnnotatedText& description, const GroundTruthSet& gt, const Lexicons& lex,
                                    const StopwordList& stopwords);

struct AblationRow {
  ChunkStrategy strategy = ChunkStrategy::Complete;
  double avg_chunks = 0;  // scoring units per sample
  double auc = 0;         // claim-level AUC on the shared held-out claim set
  double unit_auc = 0;    // AUC over the strategy's own held-out units
  std::size_t rows = 0;   // training + test units

  static AblationRow from_json(const nlohmann::json& j);
};

// Trains one membership network per strategy (same config, same held-out
// samples) and scores the same reference claims with each: a claim takes the
// highest hallucination score among the units overlapping its span, or 0 when
// no unit covers it.
std::vector<AblationRow> chunking_ablation(const std::vector<AblationSample>& samples, const TrainConfig& cfg,
                                           double test_fraction);

nlohmann::json ablation_json(std::span<const AblationRow> rows);
std::string render_ablation(std::span<const AblationRow> rows);

// Runs fn(i) for i in [0, n) on a small worker pool.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace hspp
