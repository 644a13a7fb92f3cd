#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "hspp/evaluation.hpp"

namespace hspp {

std::string_view to_string(ChunkStrategy strategy) {
  switch (strategy) {
    case ChunkStrategy::NoChunking: return "No Chunking";
    case ChunkStrategy::Sentence: return "Sentence-level";
    case ChunkStrategy::ObjectOnly: return "Object-only";
    case ChunkStrategy::ObjectAttribute: return "Object + Attribute";
    case ChunkStrategy::Complete: return "Complete Semantic";
  }
  return "unknown";
}

std::optional<ChunkStrategy> parse_strategy(std::string_view name) {
  for (auto s : kAllStrategies) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

AblationRow AblationRow::from_json(const nlohmann::json& j) {
  const auto name = j.at("strategy").get<std::string>();
  const auto strategy = parse_strategy(name);
  if (!strategy) throw Error(ErrorKind::Invalid, "unknown chunking strategy " + name);
  AblationRow row;
  row.strategy = *strategy;
  row.avg_chunks = j.at("avg_chunks").get<double>();
  row.auc = j.at("auc").get<double>();
  row.unit_auc = j.at("unit_auc").get<double>();
  row.rows = j.at("rows").get<std::size_t>();
  return row;
}

namespace {

HallucinationLabel worst(HallucinationLabel a, HallucinationLabel b) { return severity(a) >= severity(b) ? a : b; }

void rank_units(std::vector<ContextUnit>& units) {
  const auto k = static_cast<double>(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) {
    units[i].features = {static_cast<double>(units[i].end - units[i].start + 1), k, static_cast<double>(i + 1) / k};
  }
}

}  // namespace

std::vector<ContextUnit> strategy_units(const AnnotatedText& description, const GroundTruthSet& gt,
                                        const Lexicons& lex, const StopwordList& stopwords,
                                        ChunkStrategy strategy) {
  const auto chunks = extract_chunks(description, stopwords);
  std::vector<HallucinationLabel> labels;
  for (const auto& c : chunks) labels.push_back(classify_chunk(c, gt, lex));

  std::vector<ContextUnit> units;
  switch (strategy) {
    case ChunkStrategy::NoChunking: {
      if (description.tokens.empty()) break;
      ContextUnit u{0, static_cast<int>(description.tokens.size()) - 1};
      for (auto l : labels) u.label = worst(u.label, l);
      units.push_back(u);
      break;
    }
    case ChunkStrategy::Sentence:
      for (const auto& s : description.sentences) {
        ContextUnit u{s.begin, s.end - 1};
        for (std::size_t i = 0; i < chunks.size(); ++i) {
          if (chunks[i].start >= s.begin && chunks[i].start < s.end) u.label = worst(u.label, labels[i]);
        }
        units.push_back(u);
      }
      break;
    case ChunkStrategy::ObjectOnly:
    case ChunkStrategy::ObjectAttribute:
    case ChunkStrategy::Complete:
      for (std::size_t i = 0; i < chunks.size(); ++i) {
        const auto t = chunks[i].type;
        const bool keep = strategy == ChunkStrategy::Complete || t == ChunkType::Object ||
                          (strategy == ChunkStrategy::ObjectAttribute && t == ChunkType::Attribute);
        if (keep) units.push_back({chunks[i].start, chunks[i].end, {}, labels[i]});
      }
      break;
  }
  rank_units(units);
  return units;
}

AblationSample make_ablation_sample(std::string sample_id, const std::array<double, kNumTraceFeatures>& trace_features,
                                    const AnnotatedText& description, const GroundTruthSet& gt, const Lexicons& lex,
                                    const StopwordList& stopwords) {
  AblationSample s;
  s.sample_id = std::move(sample_id);
  s.trace_features = trace_features;
  for (std::size_t k = 0; k < kAllStrategies.size(); ++k) {
    s.units[k] = strategy_units(description, gt, lex, stopwords, kAllStrategies[k]);
  }
  s.claims = s.units[static_cast<std::size_t>(ChunkStrategy::Complete)];
  return s;
}

std::vector<AblationRow> chunking_ablation(const std::vector<AblationSample>& samples, const TrainConfig& cfg,
                                           double test_fraction) {
  std::set<std::string> ids;
  for (const auto& s : samples) {
    if (!ids.insert(s.sample_id).second) throw Error(ErrorKind::Invalid, "duplicate ablation sample " + s.sample_id);
  }

  // One shared sample-level split so every strategy sees the same test images.
  std::vector<LabeledExample> id_carriers;
  for (const auto& id : ids) id_carriers.push_back({id, {}, HallucinationLabel::Correct});
  const auto split = split_by_sample(id_carriers, test_fraction, derive_seed(cfg.seed, "ablation/test_split"));
  std::set<std::string> test_ids;
  for (const auto& e : split.second) test_ids.insert(e.sample_id);

  std::vector<AblationRow> rows;
  for (std::size_t k = 0; k < kAllStrategies.size(); ++k) {
    std::vector<LabeledExample> train_part, test_part;
    std::size_t total_units = 0;
    for (const auto& s : samples) {
      total_units += s.units[k].size();
      auto& dst = test_ids.count(s.sample_id) ? test_part : train_part;
      for (const auto& u : s.units[k]) dst.push_back({s.sample_id, assemble_features(s.trace_features, u.features), u.label});
    }
    const auto [model, report] = train(train_part, cfg);

    std::vector<double> unit_scores, claim_scores;
    std::vector<bool> unit_truth, claim_truth;
    for (const auto& e : test_part) {
      unit_scores.push_back(hallucination_score(model.forward(e.x)));
      unit_truth.push_back(e.y != HallucinationLabel::Correct);
    }
    for (const auto& s : samples) {
      if (!test_ids.count(s.sample_id)) continue;
      std::vector<double> scores;
      for (const auto& u : s.units[k]) scores.push_back(hallucination_score(model.forward(assemble_features(s.trace_features, u.features))));
      for (const auto& c : s.claims) {
        double best = 0;
        for (std::size_t i = 0; i < s.units[k].size(); ++i) {
          const auto& u = s.units[k][i];
          if (u.start <= c.end && c.start <= u.end) best = std::max(best, scores[i]);
        }
        claim_scores.push_back(best);
        claim_truth.push_back(c.label != HallucinationLabel::Correct);
      }
    }
    AblationRow row;
    row.strategy = kAllStrategies[k];
    row.avg_chunks = samples.empty() ? 0 : static_cast<double>(total_units) / static_cast<double>(samples.size());
    row.auc = auc_roc(claim_scores, claim_truth);
    row.unit_auc = auc_roc(unit_scores, unit_truth);
    row.rows = total_units;
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json ablation_json(std::span<const AblationRow> rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"strategy", to_string(r.strategy)}, {"avg_chunks", r.avg_chunks}, {"auc", r.auc}, {"unit_auc", r.unit_auc}, {"rows", r.rows}});
  }
  return out;
}

std::string render_ablation(std::span<const AblationRow> rows) {
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-20s %18s %9s %9s\n", "Chunking Strategy", "Avg. Chunks/Image", "AUC-ROC",
                "unit AUC");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-20s %18.1f %9.3f %9.3f\n", std::string(to_string(r.strategy)).c_str(),
                  r.avg_chunks, r.auc, r.unit_auc);
    os << buf;
  }
  return os.str();
}

}  // namespace hspp
