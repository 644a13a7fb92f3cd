#pragma once

// Binary tensor container shared by generation traces and model artifacts.
//
//   magic[4] | version u32 LE | header_len u64 LE | header (JSON) | payload
//
// The header lists every tensor (name, dtype, shape, offset, nbytes) with
// offsets relative to the payload start, plus a free-form "meta" object.
// Payload tensors are row-major little-endian f32 or f64.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace hspp {

enum class DType { F32, F64 };

struct NamedTensor {
  std::string name;
  std::vector<std::uint64_t> shape;
  DType dtype = DType::F32;
  std::vector<float> f32;
  std::vector<double> f64;

  std::uint64_t element_count() const;
};

struct Container {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(std::string_view name) const;
};

std::string encode_container(std::string_view magic, std::uint32_t version,
                             const Container& c);
Container decode_container(std::string_view bytes, std::string_view magic,
                           std::uint32_t version);

}  // namespace hspp
