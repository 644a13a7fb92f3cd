#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "hspp/features.hpp"
#include "hspp/synth.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace hspp;
using hspp::testing::make_trace;
using namespace hspp::oracle;

namespace {

GenerationTrace with_early_late(std::vector<float> early, std::vector<float> late) {
  auto t = make_trace(1, 16, early.size());
  const std::size_t d = early.size();
  t.hidden[early_layer_index(t.text_start, t.num_layers)] = {{1, d}, std::move(early)};
  t.hidden[late_layer_index(t.num_layers)] = {{1, d}, std::move(late)};
  return t;
}

}  // namespace

TEST(LayerConsistency, IdenticalStates) {
  const auto lcf = layer_consistency(with_early_late({1, 2, 3}, {1, 2, 3}));
  EXPECT_DOUBLE_EQ(lcf[0], 1.0);
  EXPECT_DOUBLE_EQ(lcf[1], 0.0);
}

TEST(LayerConsistency, OrthogonalStates) {
  const auto lcf = layer_consistency(with_early_late({1, 0}, {0, 1}));
  EXPECT_EQ(lcf[0], 0.5);
  EXPECT_EQ(lcf[1], 0.5);
}

TEST(LayerConsistency, AntiParallelStates) {
  const auto lcf = layer_consistency(with_early_late({1, -2}, {-1, 2}));
  EXPECT_NEAR(lcf[0], 0.0, 1e-15);
  EXPECT_NEAR(lcf[1], 1.0, 1e-15);
}

TEST(LayerConsistency, ZeroNormIsAnError) {
  EXPECT_THROW(layer_consistency(with_early_late({0, 0}, {1, 1})), Error);
}

TEST(LayerConsistency, MissingLayerIsAnError) {
  auto t = make_trace(2, 16);
  t.hidden.erase(late_layer_index(16));
  EXPECT_THROW(layer_consistency(t), Error);
}

TEST(LayerConsistency, SumsToOneAndIsScaleInvariant) {
  Rng rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<float> a(8), b(8);
    for (auto& v : a) v = static_cast<float>(rng.normal());
    for (auto& v : b) v = static_cast<float>(rng.normal());
    const auto lcf = layer_consistency(with_early_late(a, b));
    EXPECT_EQ(lcf[0] + lcf[1], 1.0);
    EXPECT_GE(lcf[0], 0.0);
    EXPECT_LE(lcf[0], 1.0);
    std::vector<float> a4(a), b4(b);
    for (auto& v : a4) v *= 4.0f;  // exact power-of-two scaling
    for (auto& v : b4) v *= 0.5f;
    EXPECT_NEAR(layer_consistency(with_early_late(a4, b4))[0], lcf[0], 1e-12);
  }
}

TEST(Concentration, ConstantWeightsGiveOneOverNExactly) {
  for (std::size_t n : {1u, 2u, 3u, 7u, 10u, 100u, 1000u}) {
    for (double c : {0.01, 0.5, 1.0, 3.0}) {
      const std::vector<double> w(n, c);
      EXPECT_EQ(concentration_coefficient(w), 1.0 / static_cast<double>(n)) << n << " x " << c;
    }
  }
}

TEST(Concentration, OneHotOfTen) {
  std::vector<double> w(10, 0.0);
  w[3] = 1.0;
  EXPECT_DOUBLE_EQ(concentration_coefficient(w), -0.8);
}

TEST(Concentration, MatchesDoubleSumOracle) {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto w = random_weights(rng);
    const double got = concentration_coefficient(w);
    const double want = gini_double_sum(w);
    EXPECT_LE(std::abs(got - want), 1e-9 * std::max(std::abs(want), 1e-3)) << "trial " << trial;
  }
}

TEST(Concentration, PermutationAndScaleInvariant) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    auto w = random_weights(rng);
    const double g = concentration_coefficient(w);
    std::reverse(w.begin(), w.end());
    EXPECT_EQ(concentration_coefficient(w), g);
    for (auto& v : w) v *= 8.0;
    EXPECT_NEAR(concentration_coefficient(w), g, 1e-12);
  }
}

TEST(Concentration, AllZeroIsAnError) {
  const std::vector<double> w(5, 0.0);
  EXPECT_THROW(concentration_coefficient(w), Error);
}

TEST(AttentionConcentration, UniformHundred) {
  auto t = make_trace(1, 8);
  for (auto& [layer, tensor] : t.attention) tensor = {{100}, std::vector<float>(100, 0.25f)};
  const auto acf = attention_concentration(t);
  EXPECT_DOUBLE_EQ(acf[0], 0.01);
  EXPECT_EQ(acf[1], 0.0);
}

TEST(AttentionConcentration, IdenticalLayersHaveZeroSpread) {
  auto t = make_trace(4, 8);
  const auto first = t.attention.begin()->second;
  for (auto& [layer, tensor] : t.attention) tensor = first;
  EXPECT_EQ(attention_concentration(t)[1], 0.0);
}

TEST(AttentionConcentration, ValuesInUnitInterval) {
  for (auto profile : kAllProfiles) {
    const auto acf = attention_concentration(synthesize_trace(3, profile).first);
    EXPECT_GE(acf[0], 0.0);
    EXPECT_LE(acf[0], 1.0);
    EXPECT_GE(acf[1], 0.0);
    EXPECT_LE(acf[1], 1.0);
  }
}

TEST(Confidence, WorkedExample) {
  const std::vector<double> p{0.5, 0.25, 0.2};
  const auto f = confidence_features(p);
  EXPECT_NEAR(f[0], 11.0 / 3.0, 1e-12);
  EXPECT_NEAR(f[1], std::sqrt(7.0 / 3.0), 1e-12);
  EXPECT_NEAR(f[2], -0.15, 1e-12);
  EXPECT_NEAR(f[3], 0.95 / 3.0, 1e-12);
  // 0.5 is not below the 0.5 threshold: two of three tokens count.
  EXPECT_DOUBLE_EQ(f[4], 2.0 / 3.0);
}

TEST(Confidence, ConstantSeries) {
  for (double c : {0.3, 0.5, 0.9}) {
    const std::vector<double> p(3, c);
    const auto f = confidence_features(p);
    EXPECT_EQ(f[1], 0.0);
    EXPECT_EQ(f[2], 0.0);
    EXPECT_EQ(f[4], c >= 0.5 ? 0.0 : 1.0);
  }
}

TEST(Confidence, SingleTokenConventions) {
  const std::vector<double> p{0.4};
  const auto f = confidence_features(p);
  EXPECT_EQ(f[0], 2.5);
  EXPECT_EQ(f[1], 0.0);
  EXPECT_EQ(f[2], 0.0);
  EXPECT_EQ(f[3], 0.4);
  EXPECT_EQ(f[4], 1.0);
}

TEST(Confidence, RejectsEmptyAndNonPositive) {
  const std::vector<double> empty, zero{0.5, 0.0};
  EXPECT_THROW(confidence_features(empty), Error);
  EXPECT_THROW(confidence_features(zero), Error);
}

TEST(Confidence, SlopeMatchesLeastSquaresOracle) {
  Rng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> p(2 + rng.index(60));
    for (auto& v : p) v = rng.uniform(0.01, 1.0);
    const double got = confidence_features(p)[2];
    const double want = ols_slope(p);
    EXPECT_LE(std::abs(got - want), 1e-9 * std::max(std::abs(want), 1e-6)) << "trial " << trial;
  }
}

TEST(TokenPatterns, AlternatingPair) {
  const std::vector<std::string> t{"a", "b", "a", "b"};
  const auto r = token_patterns(t);
  EXPECT_EQ(r[0], 0.5);
  EXPECT_DOUBLE_EQ(r[1], 1.0 / 3.0);
  EXPECT_EQ(r[2], 0.5);
}

TEST(TokenPatterns, AllUnique) {
  const std::vector<std::string> t{"a", "b", "c"};
  const auto r = token_patterns(t);
  EXPECT_EQ(r[0], 0.0);
  EXPECT_EQ(r[1], 0.0);
  EXPECT_EQ(r[2], 1.0);
}

TEST(TokenPatterns, SingleToken) {
  const std::vector<std::string> t{"a"};
  const auto r = token_patterns(t);
  EXPECT_EQ(r[0], 0.0);
  EXPECT_EQ(r[1], 0.0);
  EXPECT_EQ(r[2], 1.0);
}

TEST(TokenPatterns, CaseSensitive) {
  const std::vector<std::string> t{"A", "a"};
  EXPECT_EQ(token_patterns(t)[2], 1.0);
}

TEST(TokenPatterns, EmptyIsAnError) {
  const std::vector<std::string> t;
  EXPECT_THROW(token_patterns(t), Error);
}

TEST(TokenPatterns, MatchesExhaustiveEnumeration) {
  Rng rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::string> t(1 + rng.index(30));
    for (auto& s : t) s = std::string(1, static_cast<char>('a' + rng.index(5)));
    // Count distinct items by pairwise comparison against earlier positions.
    std::size_t unique = 0, unique_bigrams = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      bool seen = false;
      for (std::size_t j = 0; j < i; ++j) seen = seen || t[j] == t[i];
      unique += !seen;
    }
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      bool seen = false;
      for (std::size_t j = 0; j < i; ++j) seen = seen || (t[j] == t[i] && t[j + 1] == t[i + 1]);
      unique_bigrams += !seen;
    }
    const double T = static_cast<double>(t.size());
    const double urr = 1.0 - static_cast<double>(unique) / T;
    const double brr = t.size() > 1 ? 1.0 - static_cast<double>(unique_bigrams) / (T - 1) : 0.0;
    const auto r = token_patterns(t);
    EXPECT_EQ(r[0], urr);
    EXPECT_EQ(r[1], brr);
    EXPECT_EQ(r[2], static_cast<double>(unique) / T);
    EXPECT_EQ(r[0] + r[2], 1.0);
  }
}

TEST(TraceFeatures, TogglesZeroFillDisabledBanks) {
  const auto t = synthesize_trace(5, FailureProfile::Grounded).first;
  const auto all = trace_features(t);
  const auto no_base = trace_features(t, {false, true});
  const auto no_mm = trace_features(t, {true, false});
  for (std::size_t i = 0; i < kNumTraceFeatures; ++i) {
    if (i < kNumBaselineFeatures) {
      EXPECT_EQ(no_base[i], 0.0);
      EXPECT_EQ(no_mm[i], all[i]);
    } else {
      EXPECT_EQ(no_base[i], all[i]);
      EXPECT_EQ(no_mm[i], 0.0);
    }
  }
}

TEST(FeatureSchema, SeventySevenNamedSlots) {
  const auto& names = feature_names();
  ASSERT_EQ(names.size(), kNumInputs);
  EXPECT_EQ(std::set<std::string>(names.begin(), names.end()).size(), kNumInputs);
  EXPECT_EQ(names[62], "lcf.consistency");
  EXPECT_EQ(names[64], "acf.concentration_mean");
  EXPECT_EQ(names[68], "conf.confidence_trend");
  EXPECT_EQ(names[73], "tok.normalized_unique_tokens");
  EXPECT_EQ(names[76], "chunk.relative_position");
  const auto schema = feature_schema_json();
  EXPECT_EQ(schema[62]["index"], 63);
  EXPECT_EQ(schema[73]["index"], 74);
}

TEST(ChunkFeatures, AssembledAfterTraceFeatures) {
  SemanticChunk c;
  c.cwc = 3;
  c.cpi = 12;
  c.crp = 0.25;
  std::array<double, kNumTraceFeatures> tr{};
  tr.fill(7.0);
  const auto x = assemble_features(tr, chunk_features(c));
  EXPECT_EQ(x[73], 7.0);
  EXPECT_EQ(x[74], 3.0);
  EXPECT_EQ(x[75], 12.0);
  EXPECT_EQ(x[76], 0.25);
}
