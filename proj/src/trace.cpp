#include "hspp/trace.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hspp/common.hpp"
#include "hspp/container.hpp"

namespace hspp {
namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

NamedTensor to_named(const std::string& name, const Tensor& t) {
  NamedTensor n;
  n.name = name;
  n.dtype = DType::F32;
  n.shape.assign(t.shape.begin(), t.shape.end());
  n.f32 = t.values;
  return n;
}

Tensor from_named(const NamedTensor& n) {
  if (n.dtype != DType::F32) {
    throw Error(ErrorKind::Inconsistent, "trace tensor " + n.name + " is not f32");
  }
  Tensor t;
  t.shape.assign(n.shape.begin(), n.shape.end());
  t.values = n.f32;
  return t;
}

int parse_layer(const std::string& name, std::string_view prefix) {
  try {
    std::size_t used = 0;
    const std::string tail = name.substr(prefix.size());
    const int layer = std::stoi(tail, &used);
    if (used != tail.size()) throw std::invalid_argument(tail);
    return layer;
  } catch (const std::exception&) {
    throw Error(ErrorKind::Inconsistent, "bad layer index in tensor name " + name);
  }
}

}  // namespace

void validate(const GenerationTrace& t) {
  auto fail = [](ErrorKind kind, const std::string& what) { throw Error(kind, what); };

  if (t.num_layers < 4) fail(ErrorKind::Range, "num_layers must be >= 4");
  if (t.text_start < 0 || t.text_start >= t.num_layers) {
    fail(ErrorKind::Range, "text_start must lie in [0, num_layers)");
  }
  if (t.p_max.size() != t.token_strings.size()) {
    fail(ErrorKind::Invalid, "p_max length " + std::to_string(t.p_max.size()) +
                                 " differs from token count " +
                                 std::to_string(t.token_strings.size()));
  }
  for (std::size_t i = 0; i < t.p_max.size(); ++i) {
    const float p = t.p_max[i];
    if (!(p > 0.0f && p <= 1.0f)) {
      fail(ErrorKind::Range, "p_max[" + std::to_string(i) + "] = " + std::to_string(p) +
                                 " outside (0, 1]");
    }
  }

  if (t.hidden.empty()) fail(ErrorKind::Invalid, "no hidden layers recorded");
  const std::vector<std::size_t>* shape = nullptr;
  for (const auto& [layer, tensor] : t.hidden) {
    if (layer < 0 || layer >= t.num_layers) {
      fail(ErrorKind::Range, "hidden layer " + std::to_string(layer) + " out of range");
    }
    if (tensor.shape.size() != 2 || product(tensor.shape) != tensor.size()) {
      fail(ErrorKind::Invalid, "hidden layer " + std::to_string(layer) + " is not a (T x d) tensor");
    }
    if (shape && *shape != tensor.shape) {
      fail(ErrorKind::Invalid, "hidden layer " + std::to_string(layer) + " shape differs");
    }
    shape = &tensor.shape;
    for (float v : tensor.values) {
      if (!std::isfinite(v)) fail(ErrorKind::Range, "non-finite hidden value in layer " + std::to_string(layer));
    }
  }

  std::set<int> expected;
  for (int l = std::max(0, t.num_layers - 3); l < t.num_layers; ++l) expected.insert(l);
  std::set<int> present;
  for (const auto& [layer, tensor] : t.attention) {
    present.insert(layer);
    if (product(tensor.shape) != tensor.size() || tensor.size() == 0) {
      fail(ErrorKind::Invalid, "attention layer " + std::to_string(layer) + " shape mismatch");
    }
    for (float v : tensor.values) {
      if (!(v >= 0.0f) || !std::isfinite(v)) {
        fail(ErrorKind::Range, "attention layer " + std::to_string(layer) +
                                   " has a negative or non-finite weight");
      }
    }
  }
  if (present != expected) {
    fail(ErrorKind::Invalid, "attention must hold exactly the last 3 layers");
  }
}

int late_layer_index(int num_layers) { return num_layers - 2; }

int early_layer_index(int text_start, int num_layers) {
  const int late = late_layer_index(num_layers);
  return std::clamp(std::min(text_start + 5, num_layers - 10), 0, late);
}

std::vector<int> persisted_hidden_layers(int text_start, int num_layers, int stride) {
  std::set<int> layers;
  for (int l = text_start; l < num_layers; l += stride) layers.insert(l);
  layers.insert(early_layer_index(text_start, num_layers));
  layers.insert(late_layer_index(num_layers));
  return {layers.begin(), layers.end()};
}

std::string encode_trace(const GenerationTrace& t) {
  Container c;
  c.meta = {{"sample_id", t.sample_id},
            {"generated_text", t.generated_text},
            {"token_strings", t.token_strings},
            {"text_start", t.text_start},
            {"num_layers", t.num_layers},
            {"meta", t.meta}};
  for (const auto& [layer, tensor] : t.hidden) {
    c.tensors.push_back(to_named("hidden/" + std::to_string(layer), tensor));
  }
  for (const auto& [layer, tensor] : t.attention) {
    c.tensors.push_back(to_named("attention/" + std::to_string(layer), tensor));
  }
  c.tensors.push_back(to_named("p_max", Tensor{{t.p_max.size()}, t.p_max}));
  return encode_container(std::string_view(kTraceMagic, 4), kTraceVersion, c);
}

GenerationTrace decode_trace(std::string_view bytes) {
  const Container c = decode_container(bytes, std::string_view(kTraceMagic, 4), kTraceVersion);
  GenerationTrace t;
  try {
    t.sample_id = c.meta.at("sample_id").get<std::string>();
    t.generated_text = c.meta.at("generated_text").get<std::string>();
    t.token_strings = c.meta.at("token_strings").get<std::vector<std::string>>();
    t.text_start = c.meta.at("text_start").get<int>();
    t.num_layers = c.meta.at("num_layers").get<int>();
    t.meta = c.meta.value("meta", std::map<std::string, std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Inconsistent, std::string("trace header: ") + e.what());
  }

  bool have_pmax = false;
  for (const auto& n : c.tensors) {
    if (n.name.rfind("hidden/", 0) == 0) {
      t.hidden[parse_layer(n.name, "hidden/")] = from_named(n);
    } else if (n.name.rfind("attention/", 0) == 0) {
      t.attention[parse_layer(n.name, "attention/")] = from_named(n);
    } else if (n.name == "p_max") {
      if (n.shape.size() != 1) throw Error(ErrorKind::Inconsistent, "p_max must be rank 1");
      t.p_max = from_named(n).values;
      have_pmax = true;
    } else {
      throw Error(ErrorKind::Inconsistent, "unexpected tensor " + n.name);
    }
  }
  if (!have_pmax) throw Error(ErrorKind::Inconsistent, "p_max tensor missing");
  validate(t);
  return t;
}

void write_trace(const GenerationTrace& trace, const std::string& path) {
  validate(trace);
  write_file(path, encode_trace(trace));
}

GenerationTrace read_trace(const std::string& path) { return decode_trace(read_file(path)); }

}  // namespace hspp
