#include "hspp/manifest.hpp"

#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "hspp/common.hpp"

namespace hspp {

std::vector<ManifestRecord> read_manifest(const std::string& path) {
  const auto dir = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path fp(p);
    return (fp.is_absolute() ? fp : dir / fp).lexically_normal().string();
  };

  std::istringstream in(read_file(path));
  std::vector<ManifestRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ManifestRecord r;
      r.sample_id = j.at("sample_id").get<std::string>();
      r.trace = resolve(j.at("trace").get<std::string>());
      r.annotation = resolve(j.at("annotation").get<std::string>());
      r.ground_truth = resolve(j.at("ground_truth").get<std::string>());
      if (j.contains("profile")) r.profile = j.at("profile").get<std::string>();
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Invalid, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_manifest(const std::vector<ManifestRecord>& records, const std::string& path) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::json j = {{"sample_id", r.sample_id},
                        {"trace", r.trace},
                        {"annotation", r.annotation},
                        {"ground_truth", r.ground_truth}};
    if (r.profile) j["profile"] = *r.profile;
    out += j.dump();
    out += '\n';
  }
  write_file(path, out);
}

}  // namespace hspp
