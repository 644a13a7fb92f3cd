#include "hspp/chunker.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "hspp/common.hpp"

namespace hspp {

std::string_view to_string(ChunkType type) {
  switch (type) {
    case ChunkType::Object: return "OBJECT";
    case ChunkType::Attribute: return "ATTRIBUTE";
    case ChunkType::Relation: return "RELATION";
  }
  return "UNKNOWN";
}

std::optional<ChunkType> parse_chunk_type(std::string_view name) {
  for (auto t : {ChunkType::Object, ChunkType::Attribute, ChunkType::Relation}) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

StopwordList::StopwordList(std::set<std::string> words) {
  std::string joined;
  for (const auto& w : words) {
    words_.insert(lowercase(w));
  }
  for (const auto& w : words_) {
    joined += w;
    joined += '\n';
  }
  hash_ = fnv1a(joined);
}

StopwordList StopwordList::load(const std::string& path) {
  std::istringstream in(read_file(path));
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    words.insert(line);
  }
  return StopwordList(std::move(words));
}

bool StopwordList::contains(std::string_view lemma) const {
  return words_.find(lowercase(lemma)) != words_.end();
}

bool is_nominal(const AnnotatedToken& t) { return t.pos == "NOUN" || t.pos == "PROPN"; }

namespace {

std::vector<int> children_of(const AnnotatedText& text, int head) {
  std::vector<int> out;
  for (const auto& t : text.tokens) {
    if (t.head == head) out.push_back(t.index);
  }
  return out;
}

bool is_multiword_part(const AnnotatedToken& t) { return t.dep == "fixed" || t.dep == "mwe"; }

const AnnotatedToken& at(const AnnotatedText& text, int i) {
  return text.tokens[static_cast<std::size_t>(i)];
}

int type_order(ChunkType t) { return static_cast<int>(t); }

}  // namespace

std::string connector_lemma(const AnnotatedText& text, int connector, int noun2) {
  const auto& c = at(text, connector);
  std::vector<std::string> parts;

  if (c.dep == "prep" || c.dep == "agent") {
    if (c.head >= 0 && at(text, c.head).pos == "VERB") parts.push_back(lowercase(at(text, c.head).lemma));
    parts.push_back(lowercase(c.lemma));
    for (int child : children_of(text, connector)) {
      if (is_multiword_part(at(text, child))) parts.push_back(lowercase(at(text, child).lemma));
    }
  } else {
    parts.push_back(lowercase(c.lemma));
    std::vector<int> markers;
    for (int child : children_of(text, noun2)) {
      const auto& m = at(text, child);
      if (m.dep != "case") continue;
      markers.push_back(child);
      for (int part : children_of(text, child)) {
        if (is_multiword_part(at(text, part))) markers.push_back(part);
      }
    }
    std::sort(markers.begin(), markers.end());
    for (int m : markers) parts.push_back(lowercase(at(text, m).lemma));
  }

  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += '-';
    out += p;
  }
  return out;
}

std::vector<RelationMatch> find_relations(const AnnotatedText& text) {
  std::vector<RelationMatch> out;
  for (const auto& t : text.tokens) {
    if (!(t.dep == "prep" || t.dep == "agent" || t.pos == "VERB")) continue;
    std::vector<int> nouns;
    for (int child : children_of(text, t.index)) {
      if (is_nominal(at(text, child))) nouns.push_back(child);
    }
    if (nouns.size() < 2) continue;
    RelationMatch r;
    r.noun1 = nouns[0];
    r.connector = t.index;
    r.noun2 = nouns[1];
    r.connector_lemma = connector_lemma(text, t.index, r.noun2);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SemanticChunk> apply_chunk_rules(const AnnotatedText& text, const StopwordList& stopwords) {
  validate(text);
  std::vector<SemanticChunk> chunks;
  for (const auto& t : text.tokens) {
    if (is_nominal(t) && !t.is_stop && !stopwords.contains(t.lemma)) {
      chunks.push_back({ChunkType::Object, t.index, t.index, {lowercase(t.lemma)}});
    }
    if (t.pos == "ADJ" && t.head >= 0 && is_nominal(at(text, t.head))) {
      const auto& noun = at(text, t.head);
      chunks.push_back({ChunkType::Attribute, std::min(t.index, noun.index), std::max(t.index, noun.index),
                        {lowercase(t.lemma), lowercase(noun.lemma)}});
    }
  }
  for (const auto& r : find_relations(text)) {
    const int lo = std::min({r.noun1, r.connector, r.noun2});
    const int hi = std::max({r.noun1, r.connector, r.noun2});
    chunks.push_back({ChunkType::Relation, lo, hi,
                      {lowercase(at(text, r.noun1).lemma), r.connector_lemma, lowercase(at(text, r.noun2).lemma)}});
  }
  return chunks;
}

std::vector<SemanticChunk> dedupe_and_filter(std::vector<SemanticChunk> chunks) {
  std::stable_sort(chunks.begin(), chunks.end(), [](const SemanticChunk& a, const SemanticChunk& b) {
    if (a.start != b.start) return a.start < b.start;
    if (a.type != b.type) return type_order(a.type) < type_order(b.type);
    return a.end < b.end;
  });

  std::vector<SemanticChunk> out;
  std::map<std::pair<ChunkType, std::vector<std::string>>, bool> seen;
  for (auto& c : chunks) {
    const bool short_term = std::any_of(c.payload.begin(), c.payload.end(),
                                        [](const std::string& w) { return w.size() < 2; });
    if (short_term) continue;
    if (!seen.emplace(std::make_pair(c.type, c.payload), true).second) continue;
    out.push_back(std::move(c));
  }
  return out;
}

void attach_context(std::vector<SemanticChunk>& chunks) {
  const int k = static_cast<int>(chunks.size());
  for (int i = 0; i < k; ++i) {
    auto& c = chunks[static_cast<std::size_t>(i)];
    c.cwc = c.end - c.start + 1;
    c.cpi = k;
    c.crp = static_cast<double>(i + 1) / static_cast<double>(k);
  }
}

std::vector<SemanticChunk> extract_chunks(const AnnotatedText& text, const StopwordList& stopwords) {
  auto chunks = dedupe_and_filter(apply_chunk_rules(text, stopwords));
  attach_context(chunks);
  return chunks;
}

}  // namespace hspp
