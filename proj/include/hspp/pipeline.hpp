#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hspp/chunker.hpp"
#include "hspp/evaluation.hpp"
#include "hspp/features.hpp"
#include "hspp/gt_matcher.hpp"
#include "hspp/manifest.hpp"
#include "hspp/membership.hpp"

namespace hspp {

// Lexicons and stopwords. The directory is HSPP_ASSETS when set, otherwise the
// assets/ directory of the source tree.
struct Assets {
  std::string directory;
  Lexicons lexicons;
  StopwordList stopwords;

  static std::string default_directory();
  static Assets load(const std::string& directory = default_directory());
};

// One classifier input: a chunk of one sample with its 77 features and,
// after labeling, its taxonomy class.
struct FeatureRow {
  std::string sample_id;
  int chunk_index = 0;
  ChunkType type = ChunkType::Object;
  int start = 0, end = 0;
  std::vector<std::string> payload;
  FeatureVector features{};
  std::optional<HallucinationLabel> label;

  // The chunk with cwc, cpi and crp restored from the chunk features.
  SemanticChunk chunk() const;
  bool operator==(const FeatureRow&) const = default;
};

// JSON Lines: {"sample_id", "chunk_index", "chunk_type", "span": [start, end],
//              "payload": [...], "features": [77 numbers], "label"?}
std::string format_feature_rows(const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> parse_feature_rows(std::string_view text);
std::vector<FeatureRow> read_feature_rows(const std::string& path);
void write_feature_rows(const std::vector<FeatureRow>& rows, const std::string& path);

// Throws Error(Invalid) when any row is unlabeled.
std::vector<LabeledExample> to_examples(const std::vector<FeatureRow>& rows);

struct SampleDiagnostic {
  std::string sample_id;
  std::string message;
};

struct ExtractResult {
  std::vector<FeatureRow> rows;  // manifest order, then chunk order
  std::vector<SampleDiagnostic> failures;
  std::size_t samples_ok = 0;
};

// Reads each trace and annotation, computes the 74 trace features once per
// sample and emits one row per surviving chunk. A sample whose inputs fail
// to load or validate is skipped and reported.
ExtractResult extract_rows(const std::vector<ManifestRecord>& manifest, const StopwordList& stopwords,
                           const FeatureToggles& toggles = {}, unsigned threads = 0);

struct ChunkListing {
  std::string sample_id;
  std::vector<SemanticChunk> chunks;
};

// Chunks only (no trace access); failures reported like extract_rows.
std::pair<std::vector<ChunkListing>, std::vector<SampleDiagnostic>> chunk_manifest(
    const std::vector<ManifestRecord>& manifest, const StopwordList& stopwords, unsigned threads = 0);
std::string format_chunk_listings(const std::vector<ChunkListing>& listings);

// Labels rows in place against each sample's ground-truth captions. Rows of a
// sample whose ground truth cannot be read stay unlabeled and are reported.
std::vector<SampleDiagnostic> label_rows(std::vector<FeatureRow>& rows, const std::vector<ManifestRecord>& manifest,
                                         const Lexicons& lex);

// Everything the ablation needs for one sample, loaded once.
struct SampleInputs {
  std::string sample_id;
  std::array<double, kNumTraceFeatures> trace_features{};
  AnnotatedText description;
  GroundTruthSet ground_truth;
};

std::vector<SampleInputs> load_samples(const std::vector<ManifestRecord>& manifest, const Assets& assets,
                                       const FeatureToggles& toggles = {}, unsigned threads = 0);

std::vector<AblationSample> ablation_samples(const std::vector<SampleInputs>& samples, const Assets& assets);

// Writes traces/, annotations/, ground_truth/ and manifest.jsonl under
// out_dir for n samples of every failure profile. Sample i of a profile uses
// seed derive_seed(seed, "<profile>/<i>").
std::vector<ManifestRecord> write_synthetic_corpus(const std::string& out_dir, std::uint64_t seed,
                                                   std::size_t n_per_profile, unsigned threads = 0);

// Sample score for "any hallucination": the maximum chunk score.
struct SampleScore {
  std::string sample_id;
  double score = 0;
};
std::vector<SampleScore> sample_scores(const std::vector<Prediction>& predictions);

struct EvalConfig {
  double test_fraction = 0.2;
  int importance_repeats = 10;
  std::size_t importance_max_rows = 0;  // 0 = all rows
  bool importance = false;
  bool ablation = false;

  nlohmann::json to_json() const;
  static EvalConfig from_json(const nlohmann::json& j, EvalConfig base);
};

struct PipelineConfig {
  std::string manifest;
  std::string assets = Assets::default_directory();
  FeatureToggles toggles;
  TrainConfig train;
  EvalConfig eval;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  unsigned threads = 0;

  // Propagates the master seed into the training stage.
  void apply_seed(std::uint64_t master);
  // Throws Error(Io) when a referenced path does not exist.
  void validate() const;
  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const std::string& path);
};

}  // namespace hspp
