#include "hspp/container.hpp"

#include <cstring>

#include "hspp/common.hpp"

namespace hspp {
namespace {

constexpr std::size_t kPreamble = 4 + 4 + 8;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(std::string_view bytes, std::size_t at, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
  }
  return v;
}

std::size_t element_size(DType d) { return d == DType::F32 ? 4 : 8; }

std::string_view dtype_name(DType d) { return d == DType::F32 ? "f32" : "f64"; }

DType parse_dtype(const std::string& s) {
  if (s == "f32") return DType::F32;
  if (s == "f64") return DType::F64;
  throw Error(ErrorKind::Inconsistent, "unknown tensor dtype '" + s + "'");
}

}  // namespace

std::uint64_t NamedTensor::element_count() const {
  std::uint64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

const NamedTensor* Container::find(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::string encode_container(std::string_view magic, std::uint32_t version,
                             const Container& c) {
  if (magic.size() != 4) throw Error(ErrorKind::Invalid, "magic must be 4 bytes");

  nlohmann::json table = nlohmann::json::array();
  std::string payload;
  for (const auto& t : c.tensors) {
    const std::uint64_t count = t.element_count();
    const std::uint64_t held = t.dtype == DType::F32 ? t.f32.size() : t.f64.size();
    if (count != held) {
      throw Error(ErrorKind::Inconsistent,
                  "tensor " + t.name + " shape does not match element count");
    }
    const std::uint64_t offset = payload.size();
    if (t.dtype == DType::F32) {
      for (float f : t.f32) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(payload, bits);
      }
    } else {
      for (double d : t.f64) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, 8);
        put_u64(payload, bits);
      }
    }
    table.push_back({{"name", t.name},
                     {"dtype", dtype_name(t.dtype)},
                     {"shape", t.shape},
                     {"offset", offset},
                     {"nbytes", payload.size() - offset}});
  }

  nlohmann::json header = {{"meta", c.meta},
                           {"tensors", table},
                           {"payload_bytes", payload.size()}};
  const std::string header_text = header.dump();

  std::string out;
  out.reserve(kPreamble + header_text.size() + payload.size());
  out.append(magic);
  put_u32(out, version);
  put_u64(out, header_text.size());
  out += header_text;
  out += payload;
  return out;
}

Container decode_container(std::string_view bytes, std::string_view magic,
                           std::uint32_t version) {
  if (bytes.size() < kPreamble) {
    throw Error(ErrorKind::Truncated, "file shorter than container preamble");
  }
  if (bytes.substr(0, 4) != magic) {
    throw Error(ErrorKind::BadMagic, "bad magic '" + std::string(bytes.substr(0, 4)) +
                                         "', expected '" + std::string(magic) + "'");
  }
  const auto file_version = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
  if (file_version != version) {
    throw Error(ErrorKind::VersionMismatch,
                "container version " + std::to_string(file_version) +
                    " unsupported (expected " + std::to_string(version) + ")");
  }
  const std::uint64_t header_len = get_le(bytes, 8, 8);
  if (header_len > bytes.size() - kPreamble) {
    throw Error(ErrorKind::Truncated, "header length exceeds file size");
  }

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(kPreamble, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Inconsistent, std::string("unparseable header: ") + e.what());
  }

  const std::string_view payload = bytes.substr(kPreamble + header_len);
  try {
    const auto declared = header.at("payload_bytes").get<std::uint64_t>();
    if (declared > payload.size()) {
      throw Error(ErrorKind::Truncated, "header declares " + std::to_string(declared) +
                                            " payload bytes but file holds " +
                                            std::to_string(payload.size()));
    }
    if (declared < payload.size()) {
      throw Error(ErrorKind::Inconsistent, "trailing bytes after declared payload");
    }

    Container c;
    c.meta = header.value("meta", nlohmann::json::object());
    std::uint64_t cursor = 0;
    for (const auto& entry : header.at("tensors")) {
      NamedTensor t;
      t.name = entry.at("name").get<std::string>();
      t.dtype = parse_dtype(entry.at("dtype").get<std::string>());
      t.shape = entry.at("shape").get<std::vector<std::uint64_t>>();
      const auto offset = entry.at("offset").get<std::uint64_t>();
      const auto nbytes = entry.at("nbytes").get<std::uint64_t>();
      const std::uint64_t esize = element_size(t.dtype);
      if (nbytes != t.element_count() * esize) {
        throw Error(ErrorKind::Inconsistent, "tensor " + t.name + ": nbytes does not match shape");
      }
      if (offset < cursor) {
        throw Error(ErrorKind::Inconsistent, "tensor " + t.name + ": offsets overlap or descend");
      }
      if (offset + nbytes > payload.size()) {
        throw Error(ErrorKind::Truncated, "tensor " + t.name + " extends past payload");
      }
      cursor = offset + nbytes;
      const std::uint64_t count = t.element_count();
      if (t.dtype == DType::F32) {
        t.f32.resize(count);
        for (std::uint64_t i = 0; i < count; ++i) {
          const auto bits = static_cast<std::uint32_t>(get_le(payload, offset + 4 * i, 4));
          std::memcpy(&t.f32[i], &bits, 4);
        }
      } else {
        t.f64.resize(count);
        for (std::uint64_t i = 0; i < count; ++i) {
          const std::uint64_t bits = get_le(payload, offset + 8 * i, 8);
          std::memcpy(&t.f64[i], &bits, 8);
        }
      }
      c.tensors.push_back(std::move(t));
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Inconsistent, std::string("malformed header: ") + e.what());
  }
}

}  // namespace hspp
