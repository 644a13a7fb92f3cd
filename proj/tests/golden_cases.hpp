#pragma once

// Runs every committed golden fixture (description + ground-truth caption
// annotations) through chunk extraction and classification and compares the
// result with the hand-derived expectations in fixtures/golden/expected.json.

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hspp/chunker.hpp"
#include "hspp/gt_matcher.hpp"
#include "hspp/pipeline.hpp"

namespace hspp::golden {

struct CaseResult {
  std::string name;
  std::size_t chunks = 0;
  bool ok = false;
  std::string detail;
};

inline std::string describe(const SemanticChunk& c, HallucinationLabel label) {
  std::ostringstream os;
  os << to_string(c.type) << "[" << c.start << "," << c.end << "](";
  for (std::size_t i = 0; i < c.payload.size(); ++i) os << (i ? "," : "") << c.payload[i];
  os << ") cwc=" << c.cwc << " crp=" << c.crp << " " << to_string(label);
  return os.str();
}

inline std::vector<CaseResult> run_cases(const std::string& fixture_dir, const Assets& assets) {
  const auto dir = std::filesystem::path(fixture_dir) / "golden";
  const auto expected = nlohmann::json::parse(read_file((dir / "expected.json").string()));
  std::vector<CaseResult> results;
  for (const auto& [name, want] : expected.items()) {
    CaseResult r;
    r.name = name;
    try {
      const auto description = read_annotation((dir / (name + ".desc.tsv")).string());
      const auto gt = extract_ground_truth(read_ground_truth((dir / (name + ".gt.tsv")).string()), assets.lexicons);
      const auto chunks = extract_chunks(description, assets.stopwords);
      r.chunks = chunks.size();
      std::ostringstream diff;
      if (chunks.size() != want.size()) {
        diff << "expected " << want.size() << " chunks, got " << chunks.size() << "; ";
      }
      const std::size_t k = chunks.size();
      for (std::size_t i = 0; i < std::min(k, want.size()); ++i) {
        const auto& c = chunks[i];
        const auto& w = want[i];
        const auto label = classify_chunk(c, gt, assets.lexicons);
        const bool same = to_string(c.type) == w.at("type").get<std::string>() &&
                          c.start == w.at("span")[0].get<int>() && c.end == w.at("span")[1].get<int>() &&
                          c.payload == w.at("payload").get<std::vector<std::string>>() &&
                          c.cwc == w.at("cwc").get<int>() && c.cpi == static_cast<int>(k) &&
                          c.crp == static_cast<double>(i + 1) / static_cast<double>(k) &&
                          to_string(label) == w.at("label").get<std::string>();
        if (!same) diff << "chunk " << i << ": got " << describe(c, label) << ", want " << w.dump() << "; ";
      }
      r.detail = diff.str();
      r.ok = r.detail.empty();
    } catch (const std::exception& e) {
      r.detail = e.what();
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace hspp::golden
