#include "hspp/gt_matcher.hpp"

#include <json.hpp>

namespace hspp {

Lexicons Lexicons::load(const std::string& path) {
  try {
    return from_json_text(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    throw Error(e.kind(), path + ": " + e.what());
  }
}

Lexicons Lexicons::from_json_text(const std::string& text) {
  Lexicons lex;
  try {
    const auto doc = nlohmann::json::parse(text);
    for (const auto& o : doc.value("objects", std::vector<std::string>{})) lex.objects.insert(lowercase(o));
    if (doc.contains("attributes")) {
      for (const auto& [category, words] : doc.at("attributes").items()) {
        auto& set = lex.attribute_categories[category];
        for (const auto& w : words.get<std::vector<std::string>>()) set.insert(lowercase(w));
      }
    }
    for (const auto& r : doc.value("relations", std::vector<std::string>{})) lex.relations.insert(lowercase(r));
    for (const auto& r : doc.value("symmetric_relations", std::vector<std::string>{})) {
      lex.symmetric_relations.insert(lowercase(r));
    }
    for (const auto& group : doc.value("synonyms", std::vector<std::vector<std::string>>{})) {
      lex.add_synonym_group(group);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Invalid, std::string("lexicon document: ") + e.what());
  }
  lex.validate();
  return lex;
}

void Lexicons::add_synonym_group(const std::vector<std::string>& group) {
  for (const auto& a : group) {
    for (const auto& b : group) {
      if (a != b) synonyms[lowercase(a)].insert(lowercase(b));
    }
  }
}

bool Lexicons::are_synonyms(const std::string& a, const std::string& b) const {
  const auto it = synonyms.find(a);
  return it != synonyms.end() && it->second.count(b) > 0;
}

bool Lexicons::is_symmetric(const std::string& connector) const {
  for (const auto& s : symmetric_relations) {
    if (connector == s) return true;
    if (connector.size() > s.size() + 1 && connector.compare(connector.size() - s.size(), s.size(), s) == 0 &&
        connector[connector.size() - s.size() - 1] == '-') {
      return true;
    }
  }
  return false;
}

void Lexicons::validate() const {
  for (const auto& [word, others] : synonyms) {
    for (const auto& other : others) {
      if (!are_synonyms(other, word)) {
        throw Error(ErrorKind::Invalid, "synonym map not symmetric: " + word + " -> " + other);
      }
    }
  }
  std::map<std::string, std::string> owner;
  for (const auto& [category, words] : attribute_categories) {
    for (const auto& w : words) {
      const auto [it, inserted] = owner.emplace(w, category);
      if (!inserted) {
        throw Error(ErrorKind::Invalid,
                    "attribute '" + w + "' in both " + it->second + " and " + category);
      }
    }
  }
}

std::uint64_t Lexicons::hash() const {
  nlohmann::json doc = {{"objects", objects},
                        {"attributes", attribute_categories},
                        {"relations", relations},
                        {"symmetric_relations", symmetric_relations},
                        {"synonyms", synonyms}};
  return fnv1a(doc.dump());
}

}  // namespace hspp
