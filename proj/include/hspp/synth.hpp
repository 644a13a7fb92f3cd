#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <utility>

#include "hspp/annotation.hpp"
#include "hspp/common.hpp"
#include "hspp/trace.hpp"

namespace hspp {

// Failure signatures planted by the synthetic generator. Each failure profile
// perturbs exactly one family of internals relative to GROUNDED:
//   LAYER_DRIFT    late hidden layers drift away from early ones
//   ATTN_DISPERSE  attention rows flatten toward uniform
//   CONF_DECAY     p_max decays over the generation
//   REPETITIVE     the description repeats earlier sentences
enum class FailureProfile { Grounded, LayerDrift, AttnDisperse, ConfDecay, Repetitive };

inline constexpr std::array<FailureProfile, 5> kAllProfiles = {
    FailureProfile::Grounded, FailureProfile::LayerDrift, FailureProfile::AttnDisperse,
    FailureProfile::ConfDecay, FailureProfile::Repetitive};

std::string_view to_string(FailureProfile profile);
std::optional<FailureProfile> parse_profile(std::string_view name);

// Hallucination planted in the description for each profile.
HallucinationLabel profile_label(FailureProfile profile);

struct SyntheticSample {
  GenerationTrace trace;
  AnnotatedText description;   // generated text, annotated
  AnnotatedText ground_truth;  // one caption per sentence block
  HallucinationLabel label = HallucinationLabel::Correct;
  FailureProfile profile = FailureProfile::Grounded;
};

// Deterministic for a fixed (seed, profile). Samples sharing a seed share the
// scene and all unperturbed internals, so a failure profile differs from
// GROUNDED only through its signature (and the planted hallucination).
SyntheticSample synthesize_sample(std::uint64_t seed, FailureProfile profile);

std::pair<GenerationTrace, HallucinationLabel> synthesize_trace(std::uint64_t seed, FailureProfile profile);

// Portable draws on top of std::mt19937_64 (the standard distributions are
// implementation-defined, which would break cross-platform determinism).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  // Uniform integer in [0, n).
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0;
};

}  // namespace hspp
