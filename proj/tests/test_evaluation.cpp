#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "hspp/evaluation.hpp"
#include "hspp/pipeline.hpp"
#include "hspp/synth.hpp"

using namespace hspp;

namespace {

// Pair counting over every positive/negative pair.
double brute_force_auc(const std::vector<double>& s, const std::vector<bool>& y) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (!y[i] || y[j]) continue;
      pairs += 1;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

Prediction prediction(std::string id, HallucinationLabel truth, ClassProbabilities p) {
  return {std::move(id), truth, p};
}

std::vector<Prediction> random_predictions(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Prediction> out;
  for (std::size_t i = 0; i < n; ++i) {
    ClassProbabilities p{};
    double sum = 0;
    for (auto& v : p) sum += (v = rng.uniform(0.01, 1.0));
    for (auto& v : p) v /= sum;
    out.push_back(prediction("s" + std::to_string(i / 3), kAllLabels[rng.index(kNumClasses)], p));
  }
  return out;
}

}  // namespace

TEST(Auc, WorkedExample) {
  const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  const std::vector<bool> y{false, false, true, true};
  EXPECT_DOUBLE_EQ(auc_roc(s, y), 0.75);
  EXPECT_DOUBLE_EQ(brute_force_auc(s, y), 0.75);
}

TEST(Auc, PerfectAndTied) {
  EXPECT_EQ(auc_roc(std::vector<double>{0.1, 0.2, 0.9, 0.95}, {false, false, true, true}), 1.0);
  EXPECT_EQ(auc_roc(std::vector<double>{0.9, 0.95, 0.1, 0.2}, {false, false, true, true}), 0.0);
  EXPECT_EQ(auc_roc(std::vector<double>(6, 0.3), {true, false, true, false, false, true}), 0.5);
}

TEST(Auc, SingleClassIsAnError) {
  EXPECT_THROW(auc_roc(std::vector<double>{0.1, 0.2}, {true, true}), Error);
  EXPECT_THROW(auc_roc(std::vector<double>{0.1, 0.2}, {false, false}), Error);
  EXPECT_THROW(auc_roc(std::vector<double>{0.1}, {true, false}), Error);
}

TEST(Auc, MatchesPairCountingWithTies) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.index(60);
    std::vector<double> s(n);
    std::vector<bool> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.index(8)) / 8.0;  // many ties
      y[i] = rng.uniform() < 0.4;
    }
    y[0] = true;
    y[1] = false;
    EXPECT_NEAR(auc_roc(s, y), brute_force_auc(s, y), 1e-12);
  }
}

TEST(Auc, NegatedScoresComplementExactly) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.index(80);
    std::vector<double> s(n), neg(n);
    std::vector<bool> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.index(10));
      neg[i] = -s[i];
      y[i] = rng.uniform() < 0.5;
    }
    y[0] = true;
    y[1] = false;
    std::size_t n_pos = 0;
    for (bool b : y) n_pos += b;
    const double pairs = static_cast<double>(n_pos * (n - n_pos));
    EXPECT_EQ(mann_whitney_u2(s, y) + mann_whitney_u2(neg, y), 2.0 * pairs);
    EXPECT_EQ(auc_roc(s, y) + auc_roc(neg, y), 1.0);
  }
}

TEST(Metrics, ScalarsMatchConfusionMatrix) {
  const auto preds = random_predictions(300, 5);
  const auto r = evaluate(preds);
  double macro_p = 0, macro_r = 0, macro_f = 0, weighted = 0;
  std::size_t total = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    std::size_t tp = r.confusion[c][c], row = 0, col = 0;
    for (int k = 0; k < kNumClasses; ++k) {
      row += r.confusion[c][k];
      col += r.confusion[k][c];
    }
    const double p = col ? static_cast<double>(tp) / col : 0.0;
    const double rc = row ? static_cast<double>(tp) / row : 0.0;
    const double f = p + rc > 0 ? 2 * p * rc / (p + rc) : 0.0;
    EXPECT_EQ(r.per_class[c].support, row);
    EXPECT_NEAR(r.per_class[c].precision, p, 1e-9);
    EXPECT_NEAR(r.per_class[c].recall, rc, 1e-9);
    EXPECT_NEAR(r.per_class[c].f1, f, 1e-9);
    macro_p += p / kNumClasses;
    macro_r += rc / kNumClasses;
    macro_f += f / kNumClasses;
    weighted += f * static_cast<double>(row);
    total += row;
  }
  EXPECT_EQ(total, preds.size());
  EXPECT_NEAR(r.precision, macro_p, 1e-9);
  EXPECT_NEAR(r.recall, macro_r, 1e-9);
  EXPECT_NEAR(r.macro_f1, macro_f, 1e-9);
  EXPECT_NEAR(r.weighted_f1, weighted / static_cast<double>(total), 1e-9);
  EXPECT_GE(r.binary_auc, 0.0);
  EXPECT_LE(r.binary_auc, 1.0);
}

TEST(Metrics, BinaryAucUsesOneMinusCorrect) {
  const std::vector<Prediction> preds{
      prediction("a", HallucinationLabel::Correct, {0.9, 0.05, 0.03, 0.02}),
      prediction("b", HallucinationLabel::Category, {0.2, 0.1, 0.6, 0.1}),
      prediction("c", HallucinationLabel::Relation, {0.6, 0.1, 0.1, 0.2}),
      prediction("d", HallucinationLabel::Correct, {0.7, 0.1, 0.1, 0.1})};
  // scores 0.1, 0.8, 0.4, 0.3 -> positives (0.8, 0.4) beat both negatives
  EXPECT_DOUBLE_EQ(evaluate(preds).binary_auc, 1.0);
  EXPECT_EQ(preds[1].predicted(), HallucinationLabel::Attribute);
}

TEST(Metrics, NeedsBothBinaryClasses) {
  std::vector<Prediction> preds{prediction("a", HallucinationLabel::Correct, {0.9, 0.05, 0.03, 0.02}),
                                prediction("b", HallucinationLabel::Correct, {0.2, 0.1, 0.6, 0.1})};
  EXPECT_THROW(evaluate(preds), Error);
}

TEST(Metrics, RegenerationFromPersistedPredictionsIsBitIdentical) {
  const auto preds = random_predictions(200, 6);
  const auto text = format_predictions(preds);
  const auto back = parse_predictions(text);
  EXPECT_EQ(format_predictions(back), text);
  const auto a = evaluate(preds);
  const auto b = evaluate(back);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  EXPECT_EQ(a.render(), b.render());
  EXPECT_EQ(EvalReport::from_json(a.to_json()).to_json().dump(), a.to_json().dump());
}

TEST(Metrics, MalformedPredictionsRejected) {
  EXPECT_THROW(parse_predictions("{\"sample_id\": \"a\"}\n"), Error);
  EXPECT_THROW(parse_predictions("not json\n"), Error);
}

namespace {

// Binary task decided by feature 0 alone (plus optional exact copy in 1).
std::vector<LabeledExample> one_informative(std::size_t n, std::uint64_t seed, bool duplicate) {
  Rng rng(seed);
  std::vector<LabeledExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    LabeledExample e;
    e.sample_id = "s" + std::to_string(i);
    for (auto& v : e.x) v = rng.normal();
    e.y = i % 2 ? HallucinationLabel::Category : HallucinationLabel::Correct;
    e.x[0] = (i % 2 ? 1.5 : -1.5) + 0.7 * rng.normal();
    if (duplicate) e.x[1] = e.x[0];
    out.push_back(e);
  }
  return out;
}

TrainConfig quick_config() {
  TrainConfig cfg;
  cfg.learning_rate = 2e-3;
  cfg.max_epochs = 20;
  cfg.patience = 20;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST(Importance, DeadFeatureHasZeroDelta) {
  const auto data = one_informative(200, 1, false);
  auto model = train(data, quick_config()).first;
  const std::size_t dead = 30;
  for (std::size_t o = 0; o < model.trunk1.out; ++o) model.trunk1.w[o * model.trunk1.in + dead] = 0.0;
  ImportanceOptions opt;
  opt.seed = 2;
  opt.threads = 1;
  const auto imp = permutation_importance(model, data, binary_auc_metric, opt);
  ASSERT_EQ(imp.size(), kNumInputs);
  const auto it = std::find_if(imp.begin(), imp.end(),
                               [&](const auto& p) { return p.first == feature_names()[dead]; });
  ASSERT_NE(it, imp.end());
  EXPECT_LE(std::abs(it->second), 0.01);
}

TEST(Importance, InformativeFeatureRanksFirst) {
  const auto data = one_informative(200, 1, false);
  const auto model = train(data, quick_config()).first;
  ImportanceOptions opt;
  opt.seed = 3;
  const auto imp = permutation_importance(model, data, binary_auc_metric, opt);
  EXPECT_EQ(imp.front().first, feature_names()[0]);
  EXPECT_GT(imp.front().second, 0.1);
  for (std::size_t i = 1; i < imp.size(); ++i) EXPECT_GE(imp[i - 1].second, imp[i].second);
}

TEST(Importance, DuplicateColumnsSplitImportance) {
  ImportanceOptions opt;
  opt.seed = 4;
  const auto solo_data = one_informative(200, 1, false);
  const auto solo = permutation_importance(train(solo_data, quick_config()).first, solo_data, binary_auc_metric, opt);
  const double solo_delta = solo.front().second;

  const auto dup_data = one_informative(200, 1, true);
  const auto dup = permutation_importance(train(dup_data, quick_config()).first, dup_data, binary_auc_metric, opt);
  std::map<std::string, double> by_name(dup.begin(), dup.end());
  EXPECT_LE(by_name.at(feature_names()[0]), solo_delta + 1e-9);
  EXPECT_LE(by_name.at(feature_names()[1]), solo_delta + 1e-9);
}

TEST(Importance, DeterministicAcrossThreadCounts) {
  const auto data = one_informative(80, 7, false);
  auto cfg = quick_config();
  cfg.max_epochs = 3;
  const auto model = train(data, cfg).first;
  ImportanceOptions a;
  a.seed = 9;
  a.repeats = 3;
  a.threads = 1;
  ImportanceOptions b = a;
  b.threads = 4;
  EXPECT_EQ(permutation_importance(model, data, binary_auc_metric, a),
            permutation_importance(model, data, binary_auc_metric, b));
}

namespace {

std::vector<AblationSample> small_ablation_corpus(std::size_t per_profile) {
  const auto assets = Assets::load();
  std::vector<AblationSample> out;
  for (auto profile : kAllProfiles) {
    for (std::size_t i = 0; i < per_profile; ++i) {
      const auto s = synthesize_sample(derive_seed(17, std::string(to_string(profile)) + std::to_string(i)), profile);
      const auto gt = extract_ground_truth(split_captions(s.ground_truth), assets.lexicons);
      out.push_back(make_ablation_sample(std::string(to_string(profile)) + "-" + std::to_string(i),
                                         trace_features(s.trace), s.description, gt, assets.lexicons,
                                         assets.stopwords));
    }
  }
  return out;
}

}  // namespace

TEST(Ablation, UnitsPerStrategy) {
  const auto samples = small_ablation_corpus(3);
  for (const auto& s : samples) {
    const auto& none = s.units[0];
    ASSERT_EQ(none.size(), 1u);
    EXPECT_EQ(none[0].features[0], static_cast<double>(none[0].end - none[0].start + 1));
    EXPECT_EQ(s.units[static_cast<std::size_t>(ChunkStrategy::Complete)].size(), s.claims.size());
    EXPECT_LE(s.units[static_cast<std::size_t>(ChunkStrategy::ObjectOnly)].size(),
              s.units[static_cast<std::size_t>(ChunkStrategy::ObjectAttribute)].size());
    EXPECT_LE(s.units[static_cast<std::size_t>(ChunkStrategy::ObjectAttribute)].size(), s.claims.size());
    // The whole-text unit carries the most severe claim label.
    int worst = 0;
    for (const auto& c : s.claims) worst = std::max(worst, severity(c.label));
    EXPECT_EQ(severity(none[0].label), worst);
  }
}

TEST(Ablation, TableRowsAndDeterminism) {
  const auto samples = small_ablation_corpus(8);
  TrainConfig cfg;
  cfg.learning_rate = 2e-3;
  cfg.max_epochs = 3;
  cfg.shape = {8, 32, 16};
  cfg.seed = 3;
  const auto rows = chunking_ablation(samples, cfg, 0.25);
  ASSERT_EQ(rows.size(), kAllStrategies.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].strategy, kAllStrategies[i]);
    EXPECT_GE(rows[i].auc, 0.0);
    EXPECT_LE(rows[i].auc, 1.0);
  }
  EXPECT_EQ(rows[0].avg_chunks, 1.0);
  const auto again = chunking_ablation(samples, cfg, 0.25);
  EXPECT_EQ(ablation_json(rows).dump(), ablation_json(again).dump());
  const auto j = ablation_json(rows);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(AblationRow::from_json(j[i]).auc, rows[i].auc);
  }
  EXPECT_NE(render_ablation(rows).find("Complete Semantic"), std::string::npos);
}

TEST(Ablation, DuplicateSampleIdsAreAnError) {
  auto samples = small_ablation_corpus(2);
  samples.push_back(samples.front());
  TrainConfig cfg;
  cfg.max_epochs = 1;
  EXPECT_THROW(chunking_ablation(samples, cfg, 0.25), Error);
}

TEST(Ablation, StrategyNamesRoundTrip) {
  for (auto s : kAllStrategies) EXPECT_EQ(parse_strategy(to_string(s)), s);
  EXPECT_FALSE(parse_strategy("Paragraph").has_value());
}
