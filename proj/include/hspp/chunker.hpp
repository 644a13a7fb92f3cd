#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hspp/annotation.hpp"

namespace hspp {

enum class ChunkType { Object = 0, Attribute = 1, Relation = 2 };

std::string_view to_string(ChunkType type);
std::optional<ChunkType> parse_chunk_type(std::string_view name);

// One object / attribute / relation claim.
//   Object    payload = {noun}
//   Attribute payload = {adjective, noun}
//   Relation  payload = {noun1, connector, noun2}
// All payload terms are lowercase lemmas.
struct SemanticChunk {
  ChunkType type = ChunkType::Object;
  int start = 0;
  int end = 0;  // inclusive
  std::vector<std::string> payload;
  int cwc = 1;     // tokens in span
  int cpi = 1;     // chunks in the sample
  double crp = 1;  // 1-indexed rank / cpi

  bool operator==(const SemanticChunk&) const = default;
};

class StopwordList {
 public:
  StopwordList() = default;
  explicit StopwordList(std::set<std::string> words);

  static StopwordList load(const std::string& path);

  bool contains(std::string_view lemma) const;
  std::uint64_t hash() const { return hash_; }
  std::size_t size() const { return words_.size(); }

 private:
  std::set<std::string, std::less<>> words_;
  std::uint64_t hash_ = 0;
};

std::string lowercase(std::string_view s);

bool is_nominal(const AnnotatedToken& t);

// A connector token with its first two nominal children, surface order.
struct RelationMatch {
  int noun1 = 0;
  int connector = 0;
  int noun2 = 0;
  std::string connector_lemma;
};

// Relation rule: a token with dep in {prep, agent} or pos VERB whose
// nominal children number at least two. Fires at most once per connector.
std::vector<RelationMatch> find_relations(const AnnotatedText& text);

// Connector lemma: prepositions carry their fixed multiword parts and are
// prefixed with the governing verb ("sit-between"); verbs absorb the case
// markers of their second noun ("park-next-to").
std::string connector_lemma(const AnnotatedText& text, int connector, int noun2);

// Raw rule firing, before dedupe and context features.
std::vector<SemanticChunk> apply_chunk_rules(const AnnotatedText& text, const StopwordList& stopwords);

// Drops duplicate (type, payload) keeping the earliest span, drops chunks with
// any payload term shorter than 2 characters, sorts by start then type.
std::vector<SemanticChunk> dedupe_and_filter(std::vector<SemanticChunk> chunks);

// Sets cwc, cpi and crp in place; chunks must already be in final order.
void attach_context(std::vector<SemanticChunk>& chunks);

std::vector<SemanticChunk> extract_chunks(const AnnotatedText& text, const StopwordList& stopwords);

}  // namespace hspp
