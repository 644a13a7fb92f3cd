#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hspp {

enum class ErrorKind {
  Io,
  BadMagic,
  VersionMismatch,
  Truncated,
  Inconsistent,
  Range,
  Invalid,
};

std::string_view to_string(ErrorKind kind);

// Every failure in the library surfaces as an Error carrying a kind so callers
// (and tests) can tell a truncated container from a range violation.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

enum class HallucinationLabel : int {
  Correct = 0,
  Category = 1,
  Attribute = 2,
  Relation = 3,
};

inline constexpr int kNumClasses = 4;
inline constexpr std::array<HallucinationLabel, kNumClasses> kAllLabels = {
    HallucinationLabel::Correct, HallucinationLabel::Category,
    HallucinationLabel::Attribute, HallucinationLabel::Relation};

std::string_view to_string(HallucinationLabel label);
std::optional<HallucinationLabel> parse_label(std::string_view name);

// Hierarchy rank used when several chunk labels collapse into one unit:
// Category > Attribute > Relation > Correct.
int severity(HallucinationLabel label);

// 64-bit FNV-1a; stable across platforms, used for schema/asset hashes.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

// Stage seed derived from the master seed and a stage label.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

namespace stats {

double mean(std::span<const double> xs);
// Population standard deviation (divisor n); 0 for a single element.
double pstdev(std::span<const double> xs);
double median(std::span<const double> xs);

struct Summary {
  double mean = 0, std = 0, min = 0, max = 0, last = 0;
};
Summary summarize(std::span<const double> series);

}  // namespace stats
}  // namespace hspp
