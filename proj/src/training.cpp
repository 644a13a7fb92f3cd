#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "hspp/evaluation.hpp"
#include "hspp/membership.hpp"
#include "hspp/synth.hpp"

namespace hspp {

void TrainConfig::validate() const {
  if (patience < 1) throw Error(ErrorKind::Invalid, "patience must be >= 1");
  if (batch_size < 1) throw Error(ErrorKind::Invalid, "batch size must be >= 1");
  if (max_epochs < 1) throw Error(ErrorKind::Invalid, "max_epochs must be >= 1");
  if (!(learning_rate > 0)) throw Error(ErrorKind::Invalid, "learning rate must be positive");
  if (smote && smote_k < 1) throw Error(ErrorKind::Invalid, "smote_k must be >= 1");
  if (!(validation_fraction > 0 && validation_fraction < 1)) {
    throw Error(ErrorKind::Invalid, "validation_fraction must lie in (0, 1)");
  }
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate},
          {"min_learning_rate", min_learning_rate},
          {"schedule", "cosine"},
          {"batch_size", batch_size},
          {"patience", patience},
          {"max_epochs", max_epochs},
          {"seed", seed},
          {"class_weighting", class_weighting},
          {"smote", smote},
          {"smote_k", smote_k},
          {"validation_fraction", validation_fraction},
          {"weight_decay", weight_decay},
          {"beta1", beta1},
          {"beta2", beta2},
          {"epsilon", epsilon},
          {"gate_hidden", shape.gate_hidden},
          {"trunk_hidden1", shape.trunk_hidden1},
          {"trunk_hidden2", shape.trunk_hidden2}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j, TrainConfig c) {
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.min_learning_rate = j.value("min_learning_rate", c.min_learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.patience = j.value("patience", c.patience);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.seed = j.value("seed", c.seed);
  c.class_weighting = j.value("class_weighting", c.class_weighting);
  c.smote = j.value("smote", c.smote);
  c.smote_k = j.value("smote_k", c.smote_k);
  c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.shape.gate_hidden = j.value("gate_hidden", c.shape.gate_hidden);
  c.shape.trunk_hidden1 = j.value("trunk_hidden1", c.shape.trunk_hidden1);
  c.shape.trunk_hidden2 = j.value("trunk_hidden2", c.shape.trunk_hidden2);
  return c;
}

nlohmann::json TrainReport::to_json() const {
  nlohmann::json epochs_json = nlohmann::json::array();
  for (const auto& e : epochs) {
    epochs_json.push_back({{"epoch", e.epoch},
                           {"learning_rate", e.learning_rate},
                           {"train_loss", e.train_loss},
                           {"val_loss", e.val_loss},
                           {"val_auc", e.val_auc}});
  }
  nlohmann::json weights = nlohmann::json::object();
  for (const auto& [label, w] : class_weight) weights[std::string(to_string(label))] = w;
  return {{"epochs", epochs_json},
          {"best_epoch", best_epoch},
          {"best_val_auc", best_val_auc},
          {"stopped_early", stopped_early},
          {"train_examples", train_examples},
          {"synthetic_examples", synthetic_examples},
          {"validation_examples", validation_examples},
          {"class_weight", weights}};
}

std::pair<std::vector<LabeledExample>, std::vector<LabeledExample>> split_by_sample(
    std::span<const LabeledExample> data, double second_fraction, std::uint64_t seed) {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& e : data) {
    if (seen.insert(e.sample_id).second) ids.push_back(e.sample_id);
  }
  std::sort(ids.begin(), ids.end());
  Rng rng(seed);
  for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.index(i)]);

  auto n_second = static_cast<std::size_t>(std::llround(second_fraction * static_cast<double>(ids.size())));
  if (ids.size() >= 2) n_second = std::clamp<std::size_t>(n_second, 1, ids.size() - 1);
  const std::set<std::string> second(ids.end() - static_cast<std::ptrdiff_t>(n_second), ids.end());

  std::pair<std::vector<LabeledExample>, std::vector<LabeledExample>> out;
  for (const auto& e : data) (second.count(e.sample_id) ? out.second : out.first).push_back(e);
  return out;
}

namespace {

struct Standardizer {
  std::array<double, kNumInputs> mean{}, scale{};
};

Standardizer fit_standardizer(std::span<const LabeledExample> data) {
  Standardizer s;
  const auto n = static_cast<double>(data.size());
  for (const auto& e : data) {
    for (std::size_t f = 0; f < kNumInputs; ++f) s.mean[f] += e.x[f] / n;
  }
  for (const auto& e : data) {
    for (std::size_t f = 0; f < kNumInputs; ++f) s.scale[f] += (e.x[f] - s.mean[f]) * (e.x[f] - s.mean[f]) / n;
  }
  for (auto& v : s.scale) {
    v = std::sqrt(v);
    if (!(v > 1e-12)) v = 1.0;
  }
  return s;
}

struct ValidationResult {
  double loss = 0;
  double auc = 0;
};

ValidationResult validate_model(const MembershipModel& model, std::span<const FeatureVector> xs,
                                std::span<const HallucinationLabel> ys, const std::array<double, kNumClasses>& weights) {
  ValidationResult r;
  if (xs.empty()) return r;
  r.loss = batch_loss(model, xs, ys, weights, nullptr);
  std::vector<double> scores;
  std::vector<bool> positive;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    scores.push_back(hallucination_score(model.forward_standardized(xs[i])));
    positive.push_back(ys[i] != HallucinationLabel::Correct);
  }
  const bool both = std::find(positive.begin(), positive.end(), true) != positive.end() &&
                    std::find(positive.begin(), positive.end(), false) != positive.end();
  // Single binary class in validation: fall back to a loss-derived score.
  r.auc = both ? auc_roc(scores, positive) : -r.loss;
  return r;
}

}  // namespace

std::pair<MembershipModel, TrainReport> train(std::span<const LabeledExample> dataset, const TrainConfig& cfg) {
  cfg.validate();
  std::set<HallucinationLabel> labels;
  for (const auto& e : dataset) labels.insert(e.y);
  if (labels.size() < 2) throw Error(ErrorKind::Invalid, "training needs at least two classes");
  auto [train_part, val_part] = split_by_sample(dataset, cfg.validation_fraction, derive_seed(cfg.seed, "split"));
  return train(train_part, val_part, cfg);
}

std::pair<MembershipModel, TrainReport> train(std::span<const LabeledExample> train_set,
                                              std::span<const LabeledExample> validation_set,
                                              const TrainConfig& cfg) {
  cfg.validate();
  std::set<HallucinationLabel> labels;
  for (const auto& e : train_set) labels.insert(e.y);
  if (labels.size() < 2) throw Error(ErrorKind::Invalid, "training split needs at least two classes");

  TrainReport report;
  report.train_examples = train_set.size();
  report.validation_examples = validation_set.size();

  MembershipModel model = MembershipModel::initialize(cfg.shape, derive_seed(cfg.seed, "init"));
  model.config_echo = cfg.to_json();
  const Standardizer norm = fit_standardizer(train_set);
  model.set_normalization(norm.mean, norm.scale);

  std::vector<LabeledExample> standardized;
  standardized.reserve(train_set.size());
  for (const auto& e : train_set) standardized.push_back({e.sample_id, model.standardize(e.x), e.y});
  if (cfg.smote) {
    standardized = smote_oversample(standardized, cfg.smote_k, derive_seed(cfg.seed, "smote"));
    report.synthetic_examples = standardized.size() - train_set.size();
  }

  std::array<double, kNumClasses> weights{};
  weights.fill(1.0);
  if (cfg.class_weighting) {
    report.class_weight = class_weights(standardized);
    for (const auto& [label, w] : report.class_weight) weights[static_cast<std::size_t>(label)] = w;
  }

  std::vector<FeatureVector> xs;
  std::vector<HallucinationLabel> ys;
  for (const auto& e : standardized) {
    xs.push_back(e.x);
    ys.push_back(e.y);
  }
  std::vector<FeatureVector> val_x;
  std::vector<HallucinationLabel> val_y;
  for (const auto& e : validation_set) {
    val_x.push_back(model.standardize(e.x));
    val_y.push_back(e.y);
  }

  auto params = model.parameters();
  std::vector<std::vector<double>> m1(params.size()), m2(params.size()), grads;
  for (std::size_t i = 0; i < params.size(); ++i) {
    m1[i].assign(params[i]->size(), 0.0);
    m2[i].assign(params[i]->size(), 0.0);
  }

  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<FeatureVector> bx;
  std::vector<HallucinationLabel> by;

  MembershipModel best = model;
  double best_auc = -std::numeric_limits<double>::infinity();
  int since_best = 0;
  long step = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lr = cfg.min_learning_rate + 0.5 * (cfg.learning_rate - cfg.min_learning_rate) *
                                                  (1.0 + std::cos(M_PI * epoch / cfg.max_epochs));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.index(i)]);

    double epoch_loss = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      bx.clear();
      by.clear();
      for (std::size_t i = start; i < stop; ++i) {
        bx.push_back(xs[order[i]]);
        by.push_back(ys[order[i]]);
      }
      const double loss = batch_loss(model, bx, by, weights, &grads);
      if (!std::isfinite(loss)) {
        throw Error(ErrorKind::Range, "non-finite training loss at epoch " + std::to_string(epoch + 1) +
                                          ", step " + std::to_string(step + 1));
      }
      epoch_loss += loss * static_cast<double>(stop - start);

      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (std::size_t p = 0; p < params.size(); ++p) {
        auto& theta = *params[p];
        const auto& g = grads[p];
        for (std::size_t i = 0; i < theta.size(); ++i) {
          m1[p][i] = cfg.beta1 * m1[p][i] + (1 - cfg.beta1) * g[i];
          m2[p][i] = cfg.beta2 * m2[p][i] + (1 - cfg.beta2) * g[i] * g[i];
          theta[i] -= lr * cfg.weight_decay * theta[i];
          theta[i] -= lr * (m1[p][i] / c1) / (std::sqrt(m2[p][i] / c2) + cfg.epsilon);
        }
      }
    }

    const auto val = validate_model(model, val_x, val_y, weights);
    report.epochs.push_back({epoch + 1, lr, epoch_loss / static_cast<double>(order.size()), val.loss, val.auc});
    if (val.auc > best_auc) {
      best_auc = val.auc;
      best = model;
      report.best_epoch = epoch + 1;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      report.stopped_early = true;
      break;
    }
  }

  report.best_val_auc = best_auc;
  return {std::move(best), std::move(report)};
}

}  // namespace hspp
