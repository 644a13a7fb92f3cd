#include "hspp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hspp/features.hpp"

namespace hspp {

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * M_PI * u2);
  have_spare_ = true;
  return r * std::cos(2.0 * M_PI * u2);
}

std::string_view to_string(FailureProfile profile) {
  switch (profile) {
    case FailureProfile::Grounded: return "GROUNDED";
    case FailureProfile::LayerDrift: return "LAYER_DRIFT";
    case FailureProfile::AttnDisperse: return "ATTN_DISPERSE";
    case FailureProfile::ConfDecay: return "CONF_DECAY";
    case FailureProfile::Repetitive: return "REPETITIVE";
  }
  return "UNKNOWN";
}

std::optional<FailureProfile> parse_profile(std::string_view name) {
  for (auto p : kAllProfiles) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

HallucinationLabel profile_label(FailureProfile profile) {
  switch (profile) {
    case FailureProfile::Grounded: return HallucinationLabel::Correct;
    case FailureProfile::LayerDrift: return HallucinationLabel::Category;
    case FailureProfile::AttnDisperse: return HallucinationLabel::Attribute;
    case FailureProfile::ConfDecay: return HallucinationLabel::Relation;
    case FailureProfile::Repetitive: return HallucinationLabel::Category;
  }
  return HallucinationLabel::Correct;
}

namespace {

constexpr int kNumLayers = 16;
constexpr int kTextStart = 0;
constexpr std::size_t kHiddenDim = 16;
constexpr std::size_t kHeads = 2;
constexpr std::size_t kVisualPositions = 12;

struct Noun {
  const char* lemma;
  const char* synonym;  // alternate lemma used by some captions, or nullptr
};

const Noun kNouns[] = {
    {"car", "automobile"}, {"building", nullptr}, {"dog", "puppy"}, {"cat", nullptr},
    {"person", "man"},     {"tree", nullptr},     {"bench", nullptr}, {"bicycle", "bike"},
    {"table", nullptr},    {"chair", nullptr},    {"umbrella", nullptr}, {"bus", nullptr},
    {"horse", nullptr},    {"boat", nullptr},     {"lamp", nullptr},  {"fence", nullptr},
    {"truck", nullptr},    {"bird", nullptr},     {"sofa", "couch"},  {"clock", nullptr},
};

const char* const kAdjectives[] = {"red",  "blue",  "green",  "white",  "black", "yellow", "tall",
                                   "small", "large", "tiny",  "round",  "square", "old",   "new",
                                   "broken", "shiny", "wooden", "metal", "plastic"};

struct Verb {
  const char* surface;
  const char* lemma;
};

const Verb kVerbs[] = {{"parked", "park"}, {"sitting", "sit"}, {"standing", "stand"},
                       {"resting", "rest"}, {"lying", "lie"}};

const std::vector<std::vector<const char*>> kPreps = {
    {"next", "to"}, {"near"}, {"behind"}, {"beside"}, {"under"}, {"on"}, {"in", "front", "of"}};

struct Fact {
  std::size_t a = 0, b = 0;  // noun indices
  std::size_t verb = 0, prep = 0;
};

struct Scene {
  std::vector<std::size_t> objects;         // noun indices present
  std::vector<std::size_t> attribute;       // adjective per object slot (parallel to objects)
  std::vector<Fact> facts;                  // relation sentences
  std::size_t extra_object = 0;             // object introduced by an existential sentence
  bool has_existential = false;
};

class TextBuilder {
 public:
  struct Tok {
    std::string text, lemma, pos;
    int head;  // local index, -1 for root
    std::string dep;
    bool stop;
  };

  void add_sentence(const std::vector<Tok>& toks) {
    const int base = static_cast<int>(text_.tokens.size());
    for (std::size_t i = 0; i < toks.size(); ++i) {
      const auto& t = toks[i];
      text_.tokens.push_back({base + static_cast<int>(i), t.text, t.lemma, t.pos,
                              t.head < 0 ? -1 : base + t.head, t.dep, t.stop});
    }
    text_.sentences.push_back({base, base + static_cast<int>(toks.size())});
  }

  AnnotatedText take() { return std::move(text_); }

 private:
  AnnotatedText text_;
};

std::vector<TextBuilder::Tok> relation_sentence(const std::string& det, const std::string& adj_a,
                                                const std::string& noun_a, const Verb& verb,
                                                const std::vector<const char*>& prep, const std::string& adj_b,
                                                const std::string& noun_b) {
  std::vector<TextBuilder::Tok> s;
  s.push_back({det, det, "DET", 2, "det", true});
  s.push_back({adj_a, adj_a, "ADJ", 2, "amod", false});
  s.push_back({noun_a, noun_a, "NOUN", 3, "nsubj", false});
  s.push_back({verb.surface, verb.lemma, "VERB", -1, "ROOT", false});
  const int first_prep = static_cast<int>(s.size());
  const int noun_b_at = first_prep + static_cast<int>(prep.size()) + 2;
  for (std::size_t i = 0; i < prep.size(); ++i) {
    if (i == 0) {
      s.push_back({prep[i], prep[i], "ADP", noun_b_at, "case", true});
    } else {
      s.push_back({prep[i], prep[i], "ADP", first_prep, "fixed", true});
    }
  }
  s.push_back({det, det, "DET", noun_b_at, "det", true});
  s.push_back({adj_b, adj_b, "ADJ", noun_b_at, "amod", false});
  s.push_back({noun_b, noun_b, "NOUN", 3, "obl", false});
  s.push_back({".", ".", "PUNCT", 3, "punct", false});
  return s;
}

std::vector<TextBuilder::Tok> existential_sentence(const std::string& det, const std::string& adj,
                                                   const std::string& noun) {
  return {{"there", "there", "PRON", 1, "expl", true},
          {"is", "be", "VERB", -1, "ROOT", true},
          {det, det, "DET", 4, "det", true},
          {adj, adj, "ADJ", 4, "amod", false},
          {noun, noun, "NOUN", 1, "nsubj", false},
          {".", ".", "PUNCT", 1, "punct", false}};
}

std::size_t pick_other(Rng& rng, std::size_t n, std::size_t avoid) {
  std::size_t v = rng.index(n - 1);
  return v >= avoid ? v + 1 : v;
}

Scene make_scene(Rng& rng) {
  Scene scene;
  const std::size_t n_nouns = std::size(kNouns);
  std::vector<std::size_t> pool(n_nouns);
  for (std::size_t i = 0; i < n_nouns; ++i) pool[i] = i;
  // partial Fisher-Yates
  const std::size_t n_objects = 4 + rng.index(3);
  for (std::size_t i = 0; i < n_objects; ++i) {
    const std::size_t j = i + rng.index(n_nouns - i);
    std::swap(pool[i], pool[j]);
    scene.objects.push_back(pool[i]);
    scene.attribute.push_back(rng.index(std::size(kAdjectives)));
  }
  const std::size_t n_facts = 3 + rng.index(2);
  for (std::size_t f = 0; f < n_facts; ++f) {
    Fact fact;
    fact.a = rng.index(n_objects);
    fact.b = pick_other(rng, n_objects, fact.a);
    fact.verb = rng.index(std::size(kVerbs));
    fact.prep = rng.index(kPreps.size());
    scene.facts.push_back(fact);
  }
  scene.has_existential = rng.uniform() < 0.5;
  scene.extra_object = rng.index(n_objects);
  return scene;
}

std::string noun_text(const Scene& scene, std::size_t slot) { return kNouns[scene.objects[slot]].lemma; }
std::string adj_text(const Scene& scene, std::size_t slot) { return kAdjectives[scene.attribute[slot]]; }

// Ground-truth captions describe every scene fact; some use synonyms.
AnnotatedText ground_truth_captions(const Scene& scene, Rng& rng) {
  TextBuilder gt;
  auto maybe_synonym = [&](std::size_t slot) {
    const Noun& n = kNouns[scene.objects[slot]];
    return (n.synonym && rng.uniform() < 0.3) ? std::string(n.synonym) : std::string(n.lemma);
  };
  if (scene.has_existential) {
    gt.add_sentence(existential_sentence("a", adj_text(scene, scene.extra_object), maybe_synonym(scene.extra_object)));
  }
  for (const auto& f : scene.facts) {
    gt.add_sentence(relation_sentence("the", adj_text(scene, f.a), maybe_synonym(f.a), kVerbs[f.verb],
                                      kPreps[f.prep], adj_text(scene, f.b), maybe_synonym(f.b)));
  }
  return gt.take();
}

AnnotatedText describe(const Scene& scene, FailureProfile profile, Rng& rng) {
  TextBuilder text;
  if (scene.has_existential) {
    text.add_sentence(existential_sentence("a", adj_text(scene, scene.extra_object), noun_text(scene, scene.extra_object)));
  }
  const std::size_t n = scene.facts.size();
  auto fact_sentence = [&](const Fact& f) {
    return relation_sentence("a", adj_text(scene, f.a), noun_text(scene, f.a), kVerbs[f.verb], kPreps[f.prep],
                             adj_text(scene, f.b), noun_text(scene, f.b));
  };
  for (std::size_t i = 0; i + 1 < n; ++i) text.add_sentence(fact_sentence(scene.facts[i]));

  if (profile == FailureProfile::Repetitive) {
    for (std::size_t i = 0; i + 1 < n; ++i) text.add_sentence(fact_sentence(scene.facts[i]));
  }

  // The final sentence carries the planted hallucination, if any.
  const Fact& last = scene.facts[n - 1];
  switch (profile_label(profile)) {
    case HallucinationLabel::Correct:
      text.add_sentence(fact_sentence(last));
      break;
    case HallucinationLabel::Category: {
      std::size_t ghost = rng.index(std::size(kNouns));
      while (std::find(scene.objects.begin(), scene.objects.end(), ghost) != scene.objects.end()) {
        ghost = (ghost + 1) % std::size(kNouns);
      }
      text.add_sentence(relation_sentence("a", adj_text(scene, last.a), noun_text(scene, last.a), kVerbs[last.verb],
                                          kPreps[last.prep], kAdjectives[rng.index(std::size(kAdjectives))],
                                          kNouns[ghost].lemma));
      break;
    }
    case HallucinationLabel::Attribute: {
      const std::size_t wrong = pick_other(rng, std::size(kAdjectives), scene.attribute[last.b]);
      text.add_sentence(relation_sentence("a", adj_text(scene, last.a), noun_text(scene, last.a), kVerbs[last.verb],
                                          kPreps[last.prep], kAdjectives[wrong], noun_text(scene, last.b)));
      break;
    }
    case HallucinationLabel::Relation: {
      const std::size_t wrong_prep = pick_other(rng, kPreps.size(), last.prep);
      text.add_sentence(relation_sentence("a", adj_text(scene, last.a), noun_text(scene, last.a), kVerbs[last.verb],
                                          kPreps[wrong_prep], adj_text(scene, last.b), noun_text(scene, last.b)));
      break;
    }
  }
  return text.take();
}

Tensor random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Tensor t{{rows, cols}, std::vector<float>(rows * cols)};
  for (auto& v : t.values) v = static_cast<float>(rng.normal());
  return t;
}

}  // namespace

SyntheticSample synthesize_sample(std::uint64_t seed, FailureProfile profile) {
  Rng scene_rng(derive_seed(seed, "scene"));
  Rng gt_rng(derive_seed(seed, "ground_truth"));
  Rng text_rng(derive_seed(seed, "text"));
  Rng hidden_rng(derive_seed(seed, "hidden"));
  Rng noise_rng(derive_seed(seed, "hidden_noise"));
  Rng attn_rng(derive_seed(seed, "attention"));
  Rng pmax_rng(derive_seed(seed, "p_max"));
  Rng perturb(derive_seed(seed, std::string("perturb/") + std::string(to_string(profile))));

  SyntheticSample out;
  out.profile = profile;
  out.label = profile_label(profile);

  const Scene scene = make_scene(scene_rng);
  out.ground_truth = ground_truth_captions(scene, gt_rng);
  out.description = describe(scene, profile, text_rng);

  GenerationTrace& t = out.trace;
  t.sample_id = "synth-" + std::to_string(seed) + "-" + std::string(to_string(profile));
  for (const auto& tok : out.description.tokens) t.token_strings.push_back(tok.text);
  t.generated_text = out.description.surface();
  t.text_start = kTextStart;
  t.num_layers = kNumLayers;
  t.meta = {{"model", "synthetic"},
            {"profile", std::string(to_string(profile))},
            {"seed", std::to_string(seed)},
            {"head_handling", "full"},
            {"max_new_tokens", "64"}};

  const std::size_t T = t.token_strings.size();
  const double severity = perturb.uniform(0.35, 1.0);

  // Hidden states: a shared base plus small per-layer noise; LAYER_DRIFT mixes
  // in an unrelated direction with weight growing quadratically in depth.
  const Tensor base = random_matrix(hidden_rng, T, kHiddenDim);
  const Tensor drift = random_matrix(perturb, T, kHiddenDim);
  for (int layer : persisted_hidden_layers(kTextStart, kNumLayers)) {
    const double depth = static_cast<double>(layer) / (kNumLayers - 1);
    const double w = profile == FailureProfile::LayerDrift ? severity * depth * depth : 0.0;
    Tensor h{{T, kHiddenDim}, std::vector<float>(T * kHiddenDim)};
    for (std::size_t i = 0; i < h.values.size(); ++i) {
      const double noise = 0.25 * noise_rng.normal();
      h.values[i] = static_cast<float>((1.0 - w) * base.values[i] + w * drift.values[i] + noise);
    }
    t.hidden[layer] = std::move(h);
  }

  // Attention: each (head, token) row is a softmax over visual positions.
  // Grounded rows are sharp; ATTN_DISPERSE lowers the inverse temperature.
  for (int layer = kNumLayers - 3; layer < kNumLayers; ++layer) {
    const double sharpness = 3.0 + 0.5 * attn_rng.uniform();
    const double beta = profile == FailureProfile::AttnDisperse ? sharpness * (1.0 - 0.9 * severity) : sharpness;
    Tensor a{{kHeads, T, kVisualPositions}, std::vector<float>(kHeads * T * kVisualPositions)};
    std::vector<double> logits(kVisualPositions);
    for (std::size_t row = 0; row < kHeads * T; ++row) {
      for (auto& z : logits) z = beta * attn_rng.normal();
      const auto w = shift::softmax(logits);
      for (std::size_t j = 0; j < kVisualPositions; ++j) {
        a.values[row * kVisualPositions + j] = static_cast<float>(w[j]);
      }
    }
    t.attention[layer] = std::move(a);
  }

  // p_max: high and stable; CONF_DECAY subtracts a linear ramp.
  t.p_max.resize(T);
  for (std::size_t i = 0; i < T; ++i) {
    double p = 0.88 + 0.05 * pmax_rng.normal();
    if (profile == FailureProfile::ConfDecay && T > 1) {
      p -= 0.6 * severity * static_cast<double>(i) / static_cast<double>(T - 1);
    }
    t.p_max[i] = static_cast<float>(std::clamp(p, 0.02, 0.995));
  }

  validate(t);
  return out;
}

std::pair<GenerationTrace, HallucinationLabel> synthesize_trace(std::uint64_t seed, FailureProfile profile) {
  auto s = synthesize_sample(seed, profile);
  return {std::move(s.trace), s.label};
}

}  // namespace hspp
