#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hspp/common.hpp"
#include "hspp/features.hpp"

namespace hspp {

struct LabeledExample {
  std::string sample_id;
  FeatureVector x{};
  HallucinationLabel y = HallucinationLabel::Correct;
};

using ClassProbabilities = std::array<double, kNumClasses>;

struct ModelShape {
  std::size_t gate_hidden = 16;
  std::size_t trunk_hidden1 = 128;
  std::size_t trunk_hidden2 = 64;
};

// Fully connected layer, weights row-major (out x in).
struct Dense {
  std::size_t in = 0, out = 0;
  std::vector<double> w, b;

  Dense() = default;
  Dense(std::size_t in_, std::size_t out_) : in(in_), out(out_), w(in_ * out_, 0.0), b(out_, 0.0) {}
  bool operator==(const Dense&) const = default;
};

// Four-class membership network. The three chunk features drive a sigmoid
// gate (3 -> gate_hidden -> 74) that rescales the 74 trace features; the
// gated features plus the chunk features feed a three-layer SiLU trunk
// (77 -> h1 -> h2 -> 4) followed by softmax. Inputs are standardized with
// statistics captured from the training split.
class MembershipModel {
 public:
  MembershipModel() = default;
  static MembershipModel initialize(const ModelShape& shape, std::uint64_t seed);

  ClassProbabilities forward(const FeatureVector& raw) const;
  ClassProbabilities forward_standardized(std::span<const double> x) const;
  std::vector<double> gate(std::span<const double, kNumChunkFeatures> chunk_standardized) const;

  void set_normalization(const std::array<double, kNumInputs>& mean, const std::array<double, kNumInputs>& scale);
  FeatureVector standardize(const FeatureVector& raw) const;

  const ModelShape& shape() const { return shape_; }

  Dense gate1, gate2, trunk1, trunk2, head;
  std::array<double, kNumInputs> norm_mean{};
  std::array<double, kNumInputs> norm_scale{};
  nlohmann::json config_echo = nlohmann::json::object();

  // All learnable tensors in a fixed order (weights then bias per layer).
  std::vector<std::vector<double>*> parameters();
  std::vector<const std::vector<double>*> parameters() const;

  bool operator==(const MembershipModel& o) const;

 private:
  ModelShape shape_;
};

inline constexpr char kModelMagic[] = "HSTM";
inline constexpr std::uint32_t kModelVersion = 1;

std::string encode_model(const MembershipModel& model);
MembershipModel decode_model(std::string_view bytes);
void save_model(const MembershipModel& model, const std::string& path);
MembershipModel load_model(const std::string& path);

// Class-weighted mean cross-entropy over a batch of standardized inputs.
// When gradients is non-null it receives d(loss)/d(parameter) in the order of
// MembershipModel::parameters().
double batch_loss(const MembershipModel& model, std::span<const FeatureVector> xs,
                  std::span<const HallucinationLabel> ys, const std::array<double, kNumClasses>& class_weight,
                  std::vector<std::vector<double>>* gradients);

// Inverse-frequency weights N / (K_present * n_c) for present classes only.
std::map<HallucinationLabel, double> class_weights(std::span<const LabeledExample> data);

// Upsamples every minority class to the majority count with
//   x_new = x + u * (x_nn - x),  u ~ U[0, 1],
// x_nn drawn from the k nearest same-class neighbors (Euclidean).
std::vector<LabeledExample> smote_oversample(std::span<const LabeledExample> data, int k, std::uint64_t seed);

struct TrainConfig {
  double learning_rate = 1e-4;
  double min_learning_rate = 0.0;
  std::size_t batch_size = 32;
  int patience = 10;
  int max_epochs = 100;
  std::uint64_t seed = 0;
  bool class_weighting = true;
  bool smote = true;
  int smote_k = 5;
  double validation_fraction = 0.2;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  ModelShape shape;

  void validate() const;
  nlohmann::json to_json() const;
  // Keys absent from j keep their value in base.
  static TrainConfig from_json(const nlohmann::json& j, TrainConfig base);
};

struct EpochRecord {
  int epoch = 0;
  double learning_rate = 0;
  double train_loss = 0;
  double val_loss = 0;
  double val_auc = 0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_auc = 0;
  bool stopped_early = false;
  std::size_t train_examples = 0;
  std::size_t synthetic_examples = 0;
  std::size_t validation_examples = 0;
  std::map<HallucinationLabel, double> class_weight;

  nlohmann::json to_json() const;
};

// Splits by sample_id into train/validation, then trains.
std::pair<MembershipModel, TrainReport> train(std::span<const LabeledExample> dataset, const TrainConfig& cfg);

// Trains on an explicit split. SMOTE touches the training part only.
std::pair<MembershipModel, TrainReport> train(std::span<const LabeledExample> train_set,
                                              std::span<const LabeledExample> validation_set,
                                              const TrainConfig& cfg);

// Deterministic group split: whole samples go to one side.
std::pair<std::vector<LabeledExample>, std::vector<LabeledExample>> split_by_sample(
    std::span<const LabeledExample> data, double second_fraction, std::uint64_t seed);

// Score for "any hallucination": 1 - P(CORRECT).
double hallucination_score(const ClassProbabilities& p);

}  // namespace hspp
