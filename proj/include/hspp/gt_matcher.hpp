#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hspp/annotation.hpp"
#include "hspp/chunker.hpp"
#include "hspp/common.hpp"

namespace hspp {

// Canonicalization dictionaries for ground-truth matching.
struct Lexicons {
  std::set<std::string> objects;
  std::map<std::string, std::set<std::string>> attribute_categories;
  std::set<std::string> relations;
  std::set<std::string> symmetric_relations;
  std::map<std::string, std::set<std::string>> synonyms;  // symmetric closure

  // JSON document:
  //   {"objects": [...], "attributes": {"color": [...], ...},
  //    "relations": [...], "symmetric_relations": [...],
  //    "synonyms": [["car", "automobile"], ...]}
  static Lexicons load(const std::string& path);
  static Lexicons from_json_text(const std::string& text);

  // Adds every pairwise link inside the group.
  void add_synonym_group(const std::vector<std::string>& group);

  bool are_synonyms(const std::string& a, const std::string& b) const;
  bool is_symmetric(const std::string& connector) const;

  // Throws Error(Invalid) on asymmetric synonyms or overlapping categories.
  void validate() const;
  std::uint64_t hash() const;
};

using AttributePair = std::pair<std::string, std::string>;  // (object, attribute)
using RelationTriplet = std::array<std::string, 3>;         // (object, relation, object)

struct GroundTruthSet {
  std::set<std::string> objects;
  std::set<AttributePair> attributes;
  std::set<RelationTriplet> relations;
  std::vector<std::string> source_captions;
};

GroundTruthSet extract_ground_truth(const std::vector<AnnotatedText>& captions, const Lexicons& lex);

// Exact lowercase lemma match or synonym-map match against any member.
bool match(const std::string& term, const std::set<std::string>& target, const Lexicons& lex);

HallucinationLabel classify_chunk(const SemanticChunk& chunk, const GroundTruthSet& gt, const Lexicons& lex);

// Ground-truth file: the annotation format with one caption per sentence block.
std::vector<AnnotatedText> read_ground_truth(const std::string& path);
std::vector<AnnotatedText> split_captions(const AnnotatedText& text);

}  // namespace hspp
