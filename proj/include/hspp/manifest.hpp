#pragma once

#include <optional>
#include <string>
#include <vector>

namespace hspp {

// One sample of a dataset. Paths are stored relative to the manifest file and
// resolved to absolute form by read_manifest.
struct ManifestRecord {
  std::string sample_id;
  std::string trace;
  std::string annotation;
  std::string ground_truth;
  std::optional<std::string> profile;  // synthetic corpora only

  bool operator==(const ManifestRecord&) const = default;
};

// JSON Lines, one object per sample with keys sample_id, trace, annotation,
// ground_truth and optionally profile.
std::vector<ManifestRecord> read_manifest(const std::string& path);
void write_manifest(const std::vector<ManifestRecord>& records, const std::string& path);

}  // namespace hspp
