#pragma once

#include <string>
#include <vector>

#include "hspp/annotation.hpp"
#include "hspp/synth.hpp"
#include "hspp/trace.hpp"

namespace hspp::testing {

// A small valid trace: L layers, T tokens, hidden width d, attention over
// `visual` positions, random values drawn from `seed`.
inline GenerationTrace make_trace(int T = 3, int L = 8, std::size_t d = 4, std::size_t visual = 5,
                                  std::uint64_t seed = 1) {
  Rng rng(seed);
  GenerationTrace t;
  t.sample_id = "fixture";
  t.num_layers = L;
  t.text_start = 0;
  for (int i = 0; i < T; ++i) t.token_strings.push_back("tok" + std::to_string(i % 2));
  t.generated_text = "generated";
  for (int layer : persisted_hidden_layers(t.text_start, L)) {
    Tensor h{{static_cast<std::size_t>(T), d}, {}};
    for (std::size_t i = 0; i < h.shape[0] * d; ++i) h.values.push_back(static_cast<float>(rng.normal()));
    t.hidden[layer] = h;
  }
  for (int layer = L - 3; layer < L; ++layer) {
    Tensor a{{static_cast<std::size_t>(T), visual}, {}};
    for (std::size_t i = 0; i < a.shape[0] * visual; ++i) a.values.push_back(static_cast<float>(rng.uniform() + 0.01));
    t.attention[layer] = a;
  }
  for (int i = 0; i < T; ++i) t.p_max.push_back(static_cast<float>(rng.uniform(0.05, 1.0)));
  t.meta["model"] = "fixture";
  return t;
}

struct Tok {
  std::string text, lemma, pos;
  int head;
  std::string dep;
  bool stop = false;
};

// One sentence per inner vector; heads are absolute token indices.
inline AnnotatedText annotate(const std::vector<std::vector<Tok>>& sentences) {
  AnnotatedText out;
  int index = 0;
  for (const auto& s : sentences) {
    const int begin = index;
    for (const auto& t : s) out.tokens.push_back({index++, t.text, t.lemma, t.pos, t.head, t.dep, t.stop});
    out.sentences.push_back({begin, index});
  }
  return out;
}

inline std::string fixture_path(const std::string& name) { return std::string(HSPP_FIXTURES) + "/" + name; }

}  // namespace hspp::testing
