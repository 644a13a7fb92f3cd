#include "hspp/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>

#include "hspp/synth.hpp"
#include "hspp/trace.hpp"

#ifndef HSPP_DEFAULT_ASSETS
#define HSPP_DEFAULT_ASSETS "assets"
#endif

namespace hspp {

namespace fs = std::filesystem;

std::string Assets::default_directory() {
  if (const char* env = std::getenv("HSPP_ASSETS"); env != nullptr && *env != '\0') return env;
  return HSPP_DEFAULT_ASSETS;
}

Assets Assets::load(const std::string& directory) {
  Assets a;
  a.directory = directory;
  a.lexicons = Lexicons::load((fs::path(directory) / "lexicons.json").string());
  a.stopwords = StopwordList::load((fs::path(directory) / "stopwords.txt").string());
  return a;
}

SemanticChunk FeatureRow::chunk() const {
  SemanticChunk c;
  c.type = type;
  c.start = start;
  c.end = end;
  c.payload = payload;
  c.cwc = static_cast<int>(features[kNumTraceFeatures]);
  c.cpi = static_cast<int>(features[kNumTraceFeatures + 1]);
  c.crp = features[kNumTraceFeatures + 2];
  return c;
}

namespace {

nlohmann::json row_json(const FeatureRow& r) {
  nlohmann::json j = {{"sample_id", r.sample_id},
                      {"chunk_index", r.chunk_index},
                      {"chunk_type", to_string(r.type)},
                      {"span", {r.start, r.end}},
                      {"payload", r.payload},
                      {"features", r.features}};
  if (r.label) j["label"] = to_string(*r.label);
  return j;
}

FeatureRow row_from_json(const nlohmann::json& j) {
  FeatureRow r;
  r.sample_id = j.at("sample_id").get<std::string>();
  r.chunk_index = j.at("chunk_index").get<int>();
  const auto type = parse_chunk_type(j.at("chunk_type").get<std::string>());
  if (!type) throw Error(ErrorKind::Invalid, "unknown chunk_type " + j.at("chunk_type").dump());
  r.type = *type;
  const auto& span = j.at("span");
  if (!span.is_array() || span.size() != 2) throw Error(ErrorKind::Invalid, "span must be [start, end]");
  r.start = span[0].get<int>();
  r.end = span[1].get<int>();
  r.payload = j.at("payload").get<std::vector<std::string>>();
  const auto& f = j.at("features");
  if (!f.is_array() || f.size() != kNumInputs) {
    throw Error(ErrorKind::Inconsistent, "feature row of " + r.sample_id + " has " + std::to_string(f.size()) +
                                             " values, expected " + std::to_string(kNumInputs));
  }
  for (std::size_t i = 0; i < kNumInputs; ++i) r.features[i] = f[i].get<double>();
  if (j.contains("label")) {
    const auto label = parse_label(j.at("label").get<std::string>());
    if (!label) throw Error(ErrorKind::Invalid, "unknown label " + j.at("label").dump());
    r.label = *label;
  }
  return r;
}

}  // namespace

std::string format_feature_rows(const std::vector<FeatureRow>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += row_json(r).dump();
    out += '\n';
  }
  return out;
}

std::vector<FeatureRow> parse_feature_rows(std::string_view text) {
  std::vector<FeatureRow> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      rows.push_back(row_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Invalid, "feature row line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<FeatureRow> read_feature_rows(const std::string& path) { return parse_feature_rows(read_file(path)); }

void write_feature_rows(const std::vector<FeatureRow>& rows, const std::string& path) {
  write_file(path, format_feature_rows(rows));
}

std::vector<LabeledExample> to_examples(const std::vector<FeatureRow>& rows) {
  std::vector<LabeledExample> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    if (!r.label) {
      throw Error(ErrorKind::Invalid,
                  "row " + std::to_string(r.chunk_index) + " of " + r.sample_id + " is unlabeled; run label first");
    }
    out.push_back({r.sample_id, r.features, *r.label});
  }
  return out;
}

namespace {

AnnotatedText load_description(const ManifestRecord& rec) {
  if (!fs::exists(rec.annotation)) throw Error(ErrorKind::Io, "missing annotation file " + rec.annotation);
  return read_annotation(rec.annotation);
}

}  // namespace

ExtractResult extract_rows(const std::vector<ManifestRecord>& manifest, const StopwordList& stopwords,
                           const FeatureToggles& toggles, unsigned threads) {
  std::vector<std::vector<FeatureRow>> per_sample(manifest.size());
  std::vector<std::optional<std::string>> errors(manifest.size());
  parallel_for(manifest.size(), threads, [&](std::size_t i) {
    const auto& rec = manifest[i];
    try {
      if (!fs::exists(rec.trace)) throw Error(ErrorKind::Io, "missing trace file " + rec.trace);
      const auto trace = read_trace(rec.trace);
      const auto description = load_description(rec);
      const auto trace_part = trace_features(trace, toggles);
      const auto chunks = extract_chunks(description, stopwords);
      for (std::size_t c = 0; c < chunks.size(); ++c) {
        FeatureRow r;
        r.sample_id = rec.sample_id;
        r.chunk_index = static_cast<int>(c);
        r.type = chunks[c].type;
        r.start = chunks[c].start;
        r.end = chunks[c].end;
        r.payload = chunks[c].payload;
        r.features = assemble_features(trace_part, chunk_features(chunks[c]));
        per_sample[i].push_back(std::move(r));
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
      per_sample[i].clear();
    }
  });

  ExtractResult result;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (errors[i]) {
      result.failures.push_back({manifest[i].sample_id, *errors[i]});
      continue;
    }
    ++result.samples_ok;
    for (auto& r : per_sample[i]) result.rows.push_back(std::move(r));
  }
  return result;
}

std::pair<std::vector<ChunkListing>, std::vector<SampleDiagnostic>> chunk_manifest(
    const std::vector<ManifestRecord>& manifest, const StopwordList& stopwords, unsigned threads) {
  std::vector<ChunkListing> listings(manifest.size());
  std::vector<std::optional<std::string>> errors(manifest.size());
  parallel_for(manifest.size(), threads, [&](std::size_t i) {
    try {
      listings[i] = {manifest[i].sample_id, extract_chunks(load_description(manifest[i]), stopwords)};
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  std::vector<ChunkListing> ok;
  std::vector<SampleDiagnostic> failures;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (errors[i]) {
      failures.push_back({manifest[i].sample_id, *errors[i]});
    } else {
      ok.push_back(std::move(listings[i]));
    }
  }
  return {ok, failures};
}

std::string format_chunk_listings(const std::vector<ChunkListing>& listings) {
  std::string out;
  for (const auto& l : listings) {
    for (std::size_t c = 0; c < l.chunks.size(); ++c) {
      const auto& ch = l.chunks[c];
      nlohmann::json j = {{"sample_id", l.sample_id},
                          {"chunk_index", c},
                          {"chunk_type", to_string(ch.type)},
                          {"span", {ch.start, ch.end}},
                          {"payload", ch.payload},
                          {"cwc", ch.cwc},
                          {"cpi", ch.cpi},
                          {"crp", ch.crp}};
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

std::vector<SampleDiagnostic> label_rows(std::vector<FeatureRow>& rows, const std::vector<ManifestRecord>& manifest,
                                         const Lexicons& lex) {
  std::map<std::string, const ManifestRecord*> by_id;
  for (const auto& rec : manifest) by_id[rec.sample_id] = &rec;

  std::map<std::string, std::optional<GroundTruthSet>> cache;
  std::vector<SampleDiagnostic> failures;
  for (auto& row : rows) {
    auto it = cache.find(row.sample_id);
    if (it == cache.end()) {
      std::optional<GroundTruthSet> gt;
      try {
        const auto rec = by_id.find(row.sample_id);
        if (rec == by_id.end()) throw Error(ErrorKind::Invalid, "sample not in manifest");
        if (!fs::exists(rec->second->ground_truth)) {
          throw Error(ErrorKind::Io, "missing ground-truth file " + rec->second->ground_truth);
        }
        gt = extract_ground_truth(read_ground_truth(rec->second->ground_truth), lex);
      } catch (const std::exception& e) {
        failures.push_back({row.sample_id, e.what()});
      }
      it = cache.emplace(row.sample_id, std::move(gt)).first;
    }
    if (it->second) {
      row.label = classify_chunk(row.chunk(), *it->second, lex);
    } else {
      row.label.reset();
    }
  }
  return failures;
}

std::vector<SampleInputs> load_samples(const std::vector<ManifestRecord>& manifest, const Assets& assets,
                                       const FeatureToggles& toggles, unsigned threads) {
  std::vector<SampleInputs> out(manifest.size());
  parallel_for(manifest.size(), threads, [&](std::size_t i) {
    const auto& rec = manifest[i];
    out[i].sample_id = rec.sample_id;
    out[i].trace_features = trace_features(read_trace(rec.trace), toggles);
    out[i].description = load_description(rec);
    out[i].ground_truth = extract_ground_truth(read_ground_truth(rec.ground_truth), assets.lexicons);
  });
  return out;
}

std::vector<AblationSample> ablation_samples(const std::vector<SampleInputs>& samples, const Assets& assets) {
  std::vector<AblationSample> out;
  for (const auto& s : samples) {
    out.push_back(make_ablation_sample(s.sample_id, s.trace_features, s.description, s.ground_truth, assets.lexicons,
                                       assets.stopwords));
  }
  return out;
}

std::vector<ManifestRecord> write_synthetic_corpus(const std::string& out_dir, std::uint64_t seed,
                                                   std::size_t n_per_profile, unsigned threads) {
  const fs::path root(out_dir);
  for (const char* sub : {"traces", "annotations", "ground_truth"}) fs::create_directories(root / sub);

  std::vector<ManifestRecord> records;
  std::vector<std::pair<FailureProfile, std::size_t>> jobs;
  for (auto profile : kAllProfiles) {
    for (std::size_t i = 0; i < n_per_profile; ++i) {
      char id[64];
      std::snprintf(id, sizeof id, "%s-%04zu", std::string(to_string(profile)).c_str(), i);
      std::string sample_id = lowercase(id);
      std::replace(sample_id.begin(), sample_id.end(), '_', '-');
      records.push_back({sample_id, "traces/" + sample_id + ".hstr", "annotations/" + sample_id + ".tsv",
                         "ground_truth/" + sample_id + ".tsv", std::string(to_string(profile))});
      jobs.emplace_back(profile, i);
    }
  }
  parallel_for(jobs.size(), threads, [&](std::size_t j) {
    const auto [profile, i] = jobs[j];
    const auto sample_seed = derive_seed(seed, std::string(to_string(profile)) + "/" + std::to_string(i));
    auto sample = synthesize_sample(sample_seed, profile);
    sample.trace.sample_id = records[j].sample_id;
    write_trace(sample.trace, (root / records[j].trace).string());
    write_annotation(sample.description, (root / records[j].annotation).string());
    write_annotation(sample.ground_truth, (root / records[j].ground_truth).string());
  });
  const auto manifest_path = (root / "manifest.jsonl").string();
  write_manifest(records, manifest_path);
  return read_manifest(manifest_path);
}

std::vector<SampleScore> sample_scores(const std::vector<Prediction>& predictions) {
  std::vector<SampleScore> out;
  std::map<std::string, std::size_t> slot;
  for (const auto& p : predictions) {
    const double s = hallucination_score(p.probs);
    auto [it, inserted] = slot.emplace(p.sample_id, out.size());
    if (inserted) {
      out.push_back({p.sample_id, s});
    } else {
      out[it->second].score = std::max(out[it->second].score, s);
    }
  }
  return out;
}

nlohmann::json EvalConfig::to_json() const {
  return {{"test_fraction", test_fraction},
          {"importance_repeats", importance_repeats},
          {"importance_max_rows", importance_max_rows},
          {"importance", importance},
          {"ablation", ablation}};
}

EvalConfig EvalConfig::from_json(const nlohmann::json& j, EvalConfig c) {
  c.test_fraction = j.value("test_fraction", c.test_fraction);
  c.importance_repeats = j.value("importance_repeats", c.importance_repeats);
  c.importance_max_rows = j.value("importance_max_rows", c.importance_max_rows);
  c.importance = j.value("importance", c.importance);
  c.ablation = j.value("ablation", c.ablation);
  if (!(c.test_fraction > 0 && c.test_fraction < 1)) throw Error(ErrorKind::Range, "test_fraction must be in (0, 1)");
  if (c.importance_repeats < 1) throw Error(ErrorKind::Range, "importance_repeats must be >= 1");
  return c;
}

void PipelineConfig::apply_seed(std::uint64_t master) {
  seed = master;
  train.seed = derive_seed(master, "train");
}

void PipelineConfig::validate() const {
  if (!manifest.empty() && !fs::exists(manifest)) throw Error(ErrorKind::Io, "manifest not found: " + manifest);
  if (!fs::is_directory(assets)) throw Error(ErrorKind::Io, "asset directory not found: " + assets);
  for (const char* f : {"lexicons.json", "stopwords.txt"}) {
    if (!fs::exists(fs::path(assets) / f)) throw Error(ErrorKind::Io, std::string("asset missing: ") + f);
  }
  train.validate();
}

nlohmann::json PipelineConfig::to_json() const {
  return {{"manifest", manifest},
          {"assets", assets},
          {"features", {{"baseline", toggles.baseline}, {"multimodal", toggles.multimodal}}},
          {"train", train.to_json()},
          {"eval", eval.to_json()},
          {"out_dir", out_dir},
          {"seed", seed},
          {"threads", threads}};
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  PipelineConfig c;
  c.manifest = j.value("manifest", c.manifest);
  c.assets = j.value("assets", c.assets);
  if (j.contains("features")) {
    c.toggles.baseline = j["features"].value("baseline", true);
    c.toggles.multimodal = j["features"].value("multimodal", true);
  }
  c.apply_seed(j.value("seed", std::uint64_t{0}));
  if (j.contains("train")) c.train = TrainConfig::from_json(j["train"], c.train);
  if (j.contains("eval")) c.eval = EvalConfig::from_json(j["eval"], c.eval);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.threads = j.value("threads", 0u);
  return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  try {
    return from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Invalid, path + ": " + e.what());
  }
}

}  // namespace hspp
