#include "hspp/gt_matcher.hpp"

#include <algorithm>

namespace hspp {
namespace {

bool term_matches(const std::string& term, const std::string& candidate, const Lexicons& lex) {
  return term == candidate || lex.are_synonyms(term, candidate);
}

bool object_exists(const std::string& noun, const GroundTruthSet& gt, const Lexicons& lex) {
  return match(noun, gt.objects, lex);
}

}  // namespace

bool match(const std::string& term, const std::set<std::string>& target, const Lexicons& lex) {
  const std::string t = lowercase(term);
  if (target.count(t)) return true;
  const auto it = lex.synonyms.find(t);
  if (it == lex.synonyms.end()) return false;
  return std::any_of(it->second.begin(), it->second.end(),
                     [&](const std::string& s) { return target.count(s) > 0; });
}

std::vector<AnnotatedText> split_captions(const AnnotatedText& text) {
  std::vector<AnnotatedText> out;
  for (const auto& s : text.sentences) {
    AnnotatedText caption;
    for (int i = s.begin; i < s.end; ++i) {
      AnnotatedToken t = text.tokens[static_cast<std::size_t>(i)];
      t.index -= s.begin;
      if (t.head >= 0) t.head -= s.begin;
      caption.tokens.push_back(std::move(t));
    }
    caption.sentences.push_back({0, s.end - s.begin});
    out.push_back(std::move(caption));
  }
  return out;
}

std::vector<AnnotatedText> read_ground_truth(const std::string& path) {
  return split_captions(read_annotation(path));
}

GroundTruthSet extract_ground_truth(const std::vector<AnnotatedText>& captions, const Lexicons& lex) {
  (void)lex;  // the object vocabulary canonicalizes during matching, it never gates admission
  if (captions.empty()) throw Error(ErrorKind::Invalid, "ground truth needs at least one caption");

  GroundTruthSet gt;
  for (const auto& caption : captions) {
    validate(caption);
    gt.source_captions.push_back(caption.surface());
    for (const auto& t : caption.tokens) {
      if (is_nominal(t)) gt.objects.insert(lowercase(t.lemma));
      if (t.pos == "ADJ" && t.head >= 0) {
        const auto& noun = caption.tokens[static_cast<std::size_t>(t.head)];
        if (is_nominal(noun)) gt.attributes.insert({lowercase(noun.lemma), lowercase(t.lemma)});
      }
    }
    for (const auto& r : find_relations(caption)) {
      const auto n1 = lowercase(caption.tokens[static_cast<std::size_t>(r.noun1)].lemma);
      const auto n2 = lowercase(caption.tokens[static_cast<std::size_t>(r.noun2)].lemma);
      gt.relations.insert({n1, r.connector_lemma, n2});
      gt.objects.insert(n1);
      gt.objects.insert(n2);
    }
  }
  return gt;
}

HallucinationLabel classify_chunk(const SemanticChunk& chunk, const GroundTruthSet& gt, const Lexicons& lex) {
  const auto& p = chunk.payload;
  switch (chunk.type) {
    case ChunkType::Object:
      return object_exists(p.at(0), gt, lex) ? HallucinationLabel::Correct : HallucinationLabel::Category;

    case ChunkType::Attribute: {
      const std::string adjective = lowercase(p.at(0));
      const std::string noun = lowercase(p.at(1));
      if (!object_exists(noun, gt, lex)) return HallucinationLabel::Category;
      for (const auto& [object, attribute] : gt.attributes) {
        if (term_matches(noun, object, lex) && term_matches(adjective, attribute, lex)) {
          return HallucinationLabel::Correct;
        }
      }
      return HallucinationLabel::Attribute;
    }

    case ChunkType::Relation: {
      const std::string n1 = lowercase(p.at(0));
      const std::string rel = lowercase(p.at(1));
      const std::string n2 = lowercase(p.at(2));
      if (!object_exists(n1, gt, lex) || !object_exists(n2, gt, lex)) return HallucinationLabel::Category;
      const bool symmetric = lex.is_symmetric(rel);
      for (const auto& [a, r, b] : gt.relations) {
        if (!term_matches(rel, r, lex)) continue;
        if (term_matches(n1, a, lex) && term_matches(n2, b, lex)) return HallucinationLabel::Correct;
        if (symmetric && term_matches(n1, b, lex) && term_matches(n2, a, lex)) return HallucinationLabel::Correct;
      }
      return HallucinationLabel::Relation;
    }
  }
  return HallucinationLabel::Correct;
}

}  // namespace hspp
