#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "hspp/evaluation.hpp"

namespace hspp {

double mann_whitney_u2(std::span<const double> scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw Error(ErrorKind::Invalid, "scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of doubled mid-ranks of the positives over tie groups; stays integral.
  double rank2_sum = 0;
  double n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double doubled_mid_rank = static_cast<double>(i + 1 + j);  // 2 * (i+1 + j)/2
    for (std::size_t k = i; k < j; ++k) {
      if (positive[order[k]]) {
        rank2_sum += doubled_mid_rank;
        n_pos += 1;
      }
    }
    i = j;
  }
  return rank2_sum - n_pos * (n_pos + 1);
}

double auc_roc(std::span<const double> scores, const std::vector<bool>& positive) {
  const auto n_pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  const double n_neg = static_cast<double>(positive.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorKind::Invalid, "AUC needs both positive and negative labels");
  return mann_whitney_u2(scores, positive) / (2.0 * n_pos * n_neg);
}

HallucinationLabel Prediction::predicted() const {
  return static_cast<HallucinationLabel>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

double binary_auc_metric(std::span<const ClassProbabilities> probs, std::span<const HallucinationLabel> truth) {
  std::vector<double> scores;
  std::vector<bool> positive;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    scores.push_back(hallucination_score(probs[i]));
    positive.push_back(truth[i] != HallucinationLabel::Correct);
  }
  return auc_roc(scores, positive);
}

EvalReport evaluate(std::span<const Prediction> predictions) {
  EvalReport r;
  std::vector<ClassProbabilities> probs;
  std::vector<HallucinationLabel> truth;
  for (const auto& p : predictions) {
    probs.push_back(p.probs);
    truth.push_back(p.truth);
    ++r.confusion[static_cast<std::size_t>(p.truth)][static_cast<std::size_t>(p.predicted())];
  }
  r.binary_auc = binary_auc_metric(probs, truth);

  double auc_sum = 0;
  int auc_classes = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    std::vector<double> scores;
    std::vector<bool> positive;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      scores.push_back(probs[i][static_cast<std::size_t>(c)]);
      positive.push_back(static_cast<int>(truth[i]) == c);
    }
    const auto n_pos = std::count(positive.begin(), positive.end(), true);
    if (n_pos == 0 || n_pos == static_cast<long>(positive.size())) continue;
    auc_sum += auc_roc(scores, positive);
    ++auc_classes;
  }
  r.macro_auc = auc_classes ? auc_sum / auc_classes : 0.0;

  double p_sum = 0, r_sum = 0, f_sum = 0, weighted = 0;
  int present = 0;
  std::size_t total = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::size_t tp = r.confusion[c][c], predicted = 0, support = 0;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      predicted += r.confusion[k][c];
      support += r.confusion[c][k];
    }
    ClassMetrics& m = r.per_class[c];
    m.support = support;
    m.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    m.recall = support ? static_cast<double>(tp) / static_cast<double>(support) : 0.0;
    m.f1 = (m.precision + m.recall) > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    if (support == 0) continue;
    ++present;
    p_sum += m.precision;
    r_sum += m.recall;
    f_sum += m.f1;
    weighted += m.f1 * static_cast<double>(support);
    total += support;
  }
  r.precision = present ? p_sum / present : 0.0;
  r.recall = present ? r_sum / present : 0.0;
  r.macro_f1 = present ? f_sum / present : 0.0;
  r.weighted_f1 = total ? weighted / static_cast<double>(total) : 0.0;
  return r;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json classes = nlohmann::json::object();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& m = per_class[c];
    classes[std::string(to_string(static_cast<HallucinationLabel>(c)))] = {
        {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
  }
  nlohmann::json imp = nlohmann::json::array();
  for (const auto& [name, delta] : importance) imp.push_back({{"feature", name}, {"delta", delta}});
  return {{"binary_auc", binary_auc},
          {"macro_auc", macro_auc},
          {"precision", precision},
          {"recall", recall},
          {"macro_f1", macro_f1},
          {"weighted_f1", weighted_f1},
          {"per_class", classes},
          {"confusion", confusion},
          {"importance", imp},
          {"config", config}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  r.binary_auc = j.at("binary_auc").get<double>();
  r.macro_auc = j.at("macro_auc").get<double>();
  r.precision = j.at("precision").get<double>();
  r.recall = j.at("recall").get<double>();
  r.macro_f1 = j.at("macro_f1").get<double>();
  r.weighted_f1 = j.at("weighted_f1").get<double>();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& m = j.at("per_class").at(std::string(to_string(static_cast<HallucinationLabel>(c))));
    r.per_class[c] = {m.at("precision").get<double>(), m.at("recall").get<double>(), m.at("f1").get<double>(),
                      m.at("support").get<std::size_t>()};
  }
  r.confusion = j.at("confusion").get<decltype(r.confusion)>();
  for (const auto& e : j.at("importance")) {
    r.importance.emplace_back(e.at("feature").get<std::string>(), e.at("delta").get<double>());
  }
  r.config = j.value("config", nlohmann::json::object());
  return r;
}

std::string EvalReport::render() const {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "binary AUC-ROC (CORRECT vs hallucination): %.4f\n", binary_auc);
  os << buf;
  std::snprintf(buf, sizeof buf, "macro one-vs-rest AUC-ROC:                 %.4f\n", macro_auc);
  os << buf;
  std::snprintf(buf, sizeof buf, "precision %.4f  recall %.4f  macro F1 %.4f  weighted F1 %.4f\n\n", precision,
                recall, macro_f1, weighted_f1);
  os << buf;
  std::snprintf(buf, sizeof buf, "%-18s %9s %9s %9s %8s\n", "class", "precision", "recall", "f1", "support");
  os << buf;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& m = per_class[c];
    std::snprintf(buf, sizeof buf, "%-18s %9.4f %9.4f %9.4f %8zu\n",
                  std::string(to_string(static_cast<HallucinationLabel>(c))).c_str(), m.precision, m.recall, m.f1,
                  m.support);
    os << buf;
  }
  os << "\nconfusion (rows = truth, cols = predicted)\n";
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::snprintf(buf, sizeof buf, "%-18s", std::string(to_string(static_cast<HallucinationLabel>(c))).c_str());
    os << buf;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      std::snprintf(buf, sizeof buf, " %7zu", confusion[c][k]);
      os << buf;
    }
    os << '\n';
  }
  if (!importance.empty()) {
    os << "\ntop features by permutation importance\n";
    for (std::size_t i = 0; i < importance.size() && i < 10; ++i) {
      std::snprintf(buf, sizeof buf, "%2zu. %-36s %+.4f\n", i + 1, importance[i].first.c_str(), importance[i].second);
      os << buf;
    }
  }
  return os.str();
}

std::vector<Prediction> predict(const MembershipModel& model, std::span<const LabeledExample> data) {
  std::vector<Prediction> out(data.size());
  parallel_for(data.size(), 0, [&](std::size_t i) {
    out[i] = {data[i].sample_id, data[i].y, model.forward(data[i].x)};
  });
  return out;
}

std::string format_predictions(std::span<const Prediction> predictions) {
  std::string out;
  for (const auto& p : predictions) {
    nlohmann::json j = {{"sample_id", p.sample_id}, {"label", to_string(p.truth)}, {"probs", p.probs}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<Prediction> parse_predictions(const std::string& text) {
  std::vector<Prediction> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Prediction p;
      p.sample_id = j.at("sample_id").get<std::string>();
      const auto label = parse_label(j.at("label").get<std::string>());
      if (!label) throw Error(ErrorKind::Invalid, "unknown label in prediction record");
      p.truth = *label;
      p.probs = j.at("probs").get<ClassProbabilities>();
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Invalid, std::string("prediction record: ") + e.what());
    }
  }
  return out;
}

}  // namespace hspp
