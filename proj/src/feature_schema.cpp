#include "hspp/common.hpp"
#include "hspp/features.hpp"

namespace hspp {
namespace {

struct Descriptor {
  std::string name;
  std::string block;
};

std::vector<Descriptor> build_schema() {
  std::vector<Descriptor> d;
  const char* stats5[] = {"mean", "std", "min", "max", "last"};
  for (const char* metric : {"cosine_distance", "mean_shift_l2", "wasserstein1", "js_divergence",
                             "variance_ratio", "sign_flip_rate"}) {
    for (const char* s : stats5) d.push_back({std::string("hidden.") + metric + "." + s, "baseline.hidden_shift"});
  }
  for (const char* metric : {"entropy_delta", "js_divergence", "max_weight_delta", "cosine_distance"}) {
    for (const char* s : stats5) d.push_back({std::string("attn.") + metric + "." + s, "baseline.attention_shift"});
  }
  for (const char* s : {"mean", "std", "min", "max", "median", "first", "last", "mean_log", "std_log",
                        "frac_below_0.25", "frac_below_0.75", "geometric_mean"}) {
    d.push_back({std::string("prob.") + s, "baseline.probability"});
  }
  d.push_back({"lcf.consistency", "multimodal.layer_consistency"});
  d.push_back({"lcf.inconsistency", "multimodal.layer_consistency"});
  d.push_back({"acf.concentration_mean", "multimodal.attention_concentration"});
  d.push_back({"acf.concentration_std", "multimodal.attention_concentration"});
  d.push_back({"conf.mean_perplexity", "multimodal.confidence"});
  d.push_back({"conf.perplexity_std", "multimodal.confidence"});
  d.push_back({"conf.confidence_trend", "multimodal.confidence"});
  d.push_back({"conf.mean_confidence", "multimodal.confidence"});
  d.push_back({"conf.low_confidence_fraction", "multimodal.confidence"});
  d.push_back({"tok.unique_repetition_ratio", "multimodal.token_pattern"});
  d.push_back({"tok.bigram_repetition_ratio", "multimodal.token_pattern"});
  d.push_back({"tok.normalized_unique_tokens", "multimodal.token_pattern"});
  d.push_back({"chunk.word_count", "chunk"});
  d.push_back({"chunk.chunks_per_image", "chunk"});
  d.push_back({"chunk.relative_position", "chunk"});
  return d;
}

const std::vector<Descriptor>& schema() {
  static const std::vector<Descriptor> s = build_schema();
  return s;
}

}  // namespace

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& d : schema()) out.push_back(d.name);
    return out;
  }();
  return names;
}

std::uint64_t feature_schema_hash() { return fnv1a(feature_schema_json().dump()); }

nlohmann::json feature_schema_json() {
  nlohmann::json out = nlohmann::json::array();
  const auto& s = schema();
  for (std::size_t i = 0; i < s.size(); ++i) {
    out.push_back({{"index", i + 1}, {"name", s[i].name}, {"block", s[i].block}});
  }
  return out;
}

}  // namespace hspp
