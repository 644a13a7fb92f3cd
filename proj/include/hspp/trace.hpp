#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace hspp {

inline constexpr char kTraceMagic[] = "HSTR";
inline constexpr std::uint32_t kTraceVersion = 1;

// Dense row-major f32 tensor.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<float> values;

  std::size_t size() const { return values.size(); }
  bool operator==(const Tensor&) const = default;
};

// Recorded internals of one generation: selected-layer hidden states, the
// last three attention layers, and the chosen-token max probability per step.
struct GenerationTrace {
  std::string sample_id;
  std::string generated_text;
  std::vector<std::string> token_strings;
  int text_start = 0;
  int num_layers = 0;
  std::map<int, Tensor> hidden;     // layer -> (T_gen x d)
  std::map<int, Tensor> attention;  // layer -> flattened weights, any shape
  std::vector<float> p_max;
  std::map<std::string, std::string> meta;

  bool operator==(const GenerationTrace&) const = default;
};

// Throws Error(Range|Invalid) naming the first violated invariant.
void validate(const GenerationTrace& trace);

// Layer indices used for the early/late consistency comparison. max_layer is
// the layer count, so the late index is the second-to-last layer; the early
// index is clamped into [0, late].
int early_layer_index(int text_start, int num_layers);
int late_layer_index(int num_layers);

// Hidden layers persisted for a model: stride 2 from text_start plus the
// early/late consistency indices, ascending.
std::vector<int> persisted_hidden_layers(int text_start, int num_layers, int stride = 2);

std::string encode_trace(const GenerationTrace& trace);
GenerationTrace decode_trace(std::string_view bytes);

void write_trace(const GenerationTrace& trace, const std::string& path);
GenerationTrace read_trace(const std::string& path);

}  // namespace hspp
