// hspp: command-line driver for the hallucination-detection pipeline.
//
//   hspp synth   --out DIR [--seed S] [--n-per-profile N]
//   hspp extract --manifest M --out features.jsonl
//   hspp chunk   --manifest M --out chunks.jsonl
//   hspp label   --manifest M --features features.jsonl --out labeled.jsonl
//   hspp train   --features labeled.jsonl --out DIR
//   hspp eval    --model DIR/model.hstm --features labeled.jsonl --out DIR
//   hspp report  --eval DIR/eval_report.json
//
// Exit codes: 0 success, 2 bad configuration, 3 I/O failure, 4 invalid or
// inconsistent data, 5 one or more samples failed (outputs still written).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "hspp/evaluation.hpp"
#include "hspp/pipeline.hpp"

namespace fs = std::filesystem;
using namespace hspp;

namespace {

enum Exit : int { kOk = 0, kConfig = 2, kIo = 3, kData = 4, kSampleFailures = 5 };

int exit_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Io: return kIo;
    case ErrorKind::Range:
    case ErrorKind::Invalid:
    case ErrorKind::BadMagic:
    case ErrorKind::VersionMismatch:
    case ErrorKind::Truncated:
    case ErrorKind::Inconsistent: return kData;
  }
  return kData;
}

void report_failures(const std::string& cmd, const std::vector<SampleDiagnostic>& failures) {
  for (const auto& f : failures) std::cerr << "hspp " << cmd << ": skipped " << f.sample_id << ": " << f.message << "\n";
}

void ensure_parent(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::set<std::string> read_split(const std::string& path) {
  const auto j = nlohmann::json::parse(read_file(path));
  const auto ids = j.at("test").get<std::vector<std::string>>();
  return {ids.begin(), ids.end()};
}

struct Options {
  std::string config_path;
  std::string assets;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string manifest;
  std::string out;
  std::string features;
  std::string model;
  std::string split;
  std::string eval_report;
  std::string ablation_report;
  std::size_t n_per_profile = 200;
  bool no_baseline = false;
  bool no_multimodal = false;
  double learning_rate = 0;
  std::size_t batch_size = 0;
  int patience = 0;
  int max_epochs = 0;
  bool no_smote = false;
  bool no_class_weights = false;
  double test_fraction = 0;
  bool importance = false;
  int importance_repeats = 0;
  bool ablation = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hallucination detection from model internals and semantic chunks"};
  app.require_subcommand(1);
  Options o;

  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus covering every failure profile");
  auto* extract = app.add_subcommand("extract", "Compute 77-feature rows for every chunk of every sample");
  auto* chunk = app.add_subcommand("chunk", "List the semantic chunks of every description");
  auto* label = app.add_subcommand("label", "Attach ground-truth labels to feature rows");
  auto* trainc = app.add_subcommand("train", "Train the membership network on labeled rows");
  auto* evalc = app.add_subcommand("eval", "Score held-out rows and write the evaluation report");
  auto* report = app.add_subcommand("report", "Render saved reports as tables");

  std::map<std::string, CLI::Option*> seen;
  for (auto* sub : {synth, extract, chunk, label, trainc, evalc, report}) {
    sub->add_option("--config", o.config_path, "Pipeline config JSON (flags override it)")->check(CLI::ExistingFile);
    sub->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  }
  for (auto* sub : {extract, chunk, label, evalc}) {
    seen[sub->get_name() + "/assets"] = sub->add_option("--assets", o.assets, "Asset directory");
    seen[sub->get_name() + "/manifest"] = sub->add_option("--manifest", o.manifest, "Dataset manifest (JSONL)");
  }
  for (auto* sub : {synth, trainc, evalc}) {
    seen[sub->get_name() + "/seed"] = sub->add_option("--seed", o.seed, "Master seed");
  }

  synth->add_option("--n-per-profile", o.n_per_profile, "Samples per failure profile")->capture_default_str();
  synth->add_option("--out", o.out, "Output directory")->required();

  extract->add_option("--out", o.out, "Feature rows (JSONL)")->required();
  extract->add_flag("--no-baseline", o.no_baseline, "Zero the 62 baseline features");
  extract->add_flag("--no-multimodal", o.no_multimodal, "Zero the 12 multimodal features");

  chunk->add_option("--out", o.out, "Chunk listing (JSONL)")->required();

  label->add_option("--features", o.features, "Feature rows from extract")->required();
  label->add_option("--out", o.out, "Labeled feature rows (JSONL)")->required();

  trainc->add_option("--features", o.features, "Labeled feature rows")->required();
  trainc->add_option("--out", o.out, "Output directory for model.hstm, train_report.json, split.json")->required();
  auto* lr_opt = trainc->add_option("--learning-rate", o.learning_rate, "Peak learning rate");
  auto* bs_opt = trainc->add_option("--batch-size", o.batch_size, "Mini-batch size");
  auto* pat_opt = trainc->add_option("--patience", o.patience, "Early-stopping patience (epochs)");
  auto* ep_opt = trainc->add_option("--max-epochs", o.max_epochs, "Epoch limit");
  trainc->add_flag("--no-smote", o.no_smote, "Disable minority oversampling");
  trainc->add_flag("--no-class-weights", o.no_class_weights, "Disable inverse-frequency class weights");
  auto* tf_train = trainc->add_option("--test-fraction", o.test_fraction, "Fraction of samples held out for eval");

  evalc->add_option("--model", o.model, "Trained model (model.hstm)")->required();
  evalc->add_option("--features", o.features, "Labeled feature rows")->required();
  evalc->add_option("--split", o.split, "split.json from train; restricts scoring to its test samples");
  evalc->add_option("--out", o.out, "Output directory")->required();
  evalc->add_flag("--importance", o.importance, "Compute permutation importance");
  auto* rep_opt = evalc->add_option("--importance-repeats", o.importance_repeats, "Shuffles per feature");
  evalc->add_flag("--ablation", o.ablation, "Run the chunking-strategy ablation (needs --manifest)");
  auto* tf_eval = evalc->add_option("--test-fraction", o.test_fraction, "Held-out fraction for the ablation");

  report->add_option("--eval", o.eval_report, "eval_report.json")->required()->check(CLI::ExistingFile);
  report->add_option("--ablation", o.ablation_report, "ablation.json")->check(CLI::ExistingFile);
  report->add_option("--out", o.out, "Also write the rendered tables here");

  CLI11_PARSE(app, argc, argv);
  CLI::App* sub = app.get_subcommands().front();
  const std::string cmd = sub->get_name();
  auto given = [&](const std::string& name) {
    auto it = seen.find(cmd + "/" + name);
    return it != seen.end() && it->second->count() > 0;
  };

  try {
    PipelineConfig cfg = o.config_path.empty() ? PipelineConfig{} : PipelineConfig::load(o.config_path);
    if (!o.config_path.empty() && !given("seed")) o.seed = cfg.seed;
    if (given("seed") || o.config_path.empty()) cfg.apply_seed(o.seed);
    if (given("assets")) cfg.assets = o.assets;
    if (given("manifest")) cfg.manifest = o.manifest;
    if (sub->get_option("--threads")->count() > 0) cfg.threads = o.threads;
    if (o.no_baseline) cfg.toggles.baseline = false;
    if (o.no_multimodal) cfg.toggles.multimodal = false;
    if (lr_opt->count()) cfg.train.learning_rate = o.learning_rate;
    if (bs_opt->count()) cfg.train.batch_size = o.batch_size;
    if (pat_opt->count()) cfg.train.patience = o.patience;
    if (ep_opt->count()) cfg.train.max_epochs = o.max_epochs;
    if (o.no_smote) cfg.train.smote = false;
    if (o.no_class_weights) cfg.train.class_weighting = false;
    if (tf_train->count() || tf_eval->count()) cfg.eval.test_fraction = o.test_fraction;
    if (rep_opt->count()) cfg.eval.importance_repeats = o.importance_repeats;
    if (o.importance) cfg.eval.importance = true;
    if (o.ablation) cfg.eval.ablation = true;
    cfg.eval = EvalConfig::from_json(cfg.eval.to_json(), cfg.eval);

    const bool needs_manifest = cmd == "extract" || cmd == "chunk" || cmd == "label" ||
                                (cmd == "eval" && cfg.eval.ablation);
    if (needs_manifest && cfg.manifest.empty()) {
      std::cerr << "hspp " << cmd << ": error: --manifest is required\n";
      return kConfig;
    }
    if (cmd != "synth" && cmd != "report") cfg.validate();

    if (cmd == "synth") {
      if (o.n_per_profile == 0) std::cerr << "hspp synth: warning: --n-per-profile is 0, writing an empty manifest\n";
      const auto records = write_synthetic_corpus(o.out, cfg.seed, o.n_per_profile, cfg.threads);
      std::cout << "wrote " << records.size() << " samples to " << (fs::path(o.out) / "manifest.jsonl").string()
                << "\n";
      return kOk;
    }

    if (cmd == "extract") {
      const auto assets = Assets::load(cfg.assets);
      const auto manifest = read_manifest(cfg.manifest);
      const auto result = extract_rows(manifest, assets.stopwords, cfg.toggles, cfg.threads);
      report_failures(cmd, result.failures);
      ensure_parent(o.out);
      write_feature_rows(result.rows, o.out);
      std::cout << "extracted " << result.rows.size() << " rows from " << result.samples_ok << "/"
                << manifest.size() << " samples\n";
      return result.failures.empty() ? kOk : kSampleFailures;
    }

    if (cmd == "chunk") {
      const auto assets = Assets::load(cfg.assets);
      const auto [listings, failures] = chunk_manifest(read_manifest(cfg.manifest), assets.stopwords, cfg.threads);
      report_failures(cmd, failures);
      ensure_parent(o.out);
      write_file(o.out, format_chunk_listings(listings));
      std::size_t total = 0;
      for (const auto& l : listings) total += l.chunks.size();
      std::cout << "listed " << total << " chunks from " << listings.size() << " samples\n";
      return failures.empty() ? kOk : kSampleFailures;
    }

    if (cmd == "label") {
      const auto assets = Assets::load(cfg.assets);
      auto rows = read_feature_rows(o.features);
      const auto failures = label_rows(rows, read_manifest(cfg.manifest), assets.lexicons);
      report_failures(cmd, failures);
      std::array<std::size_t, kNumClasses> counts{};
      std::vector<FeatureRow> labeled;
      for (auto& r : rows) {
        if (!r.label) continue;
        ++counts[static_cast<int>(*r.label)];
        labeled.push_back(std::move(r));
      }
      ensure_parent(o.out);
      write_feature_rows(labeled, o.out);
      std::cout << "labeled " << labeled.size() << " rows:";
      for (auto l : kAllLabels) std::cout << " " << to_string(l) << "=" << counts[static_cast<int>(l)];
      std::cout << "\n";
      return failures.empty() ? kOk : kSampleFailures;
    }

    if (cmd == "train") {
      const auto examples = to_examples(read_feature_rows(o.features));
      auto [train_part, test_part] =
          split_by_sample(examples, cfg.eval.test_fraction, derive_seed(cfg.seed, "test_split"));
      const auto [model, rep] = hspp::train(train_part, cfg.train);
      fs::create_directories(o.out);
      save_model(model, (fs::path(o.out) / "model.hstm").string());
      auto rep_json = rep.to_json();
      rep_json["config"] = cfg.to_json();
      write_file((fs::path(o.out) / "train_report.json").string(), rep_json.dump(2) + "\n");
      std::set<std::string> train_ids, test_ids;
      for (const auto& e : train_part) train_ids.insert(e.sample_id);
      for (const auto& e : test_part) test_ids.insert(e.sample_id);
      const nlohmann::json split = {{"train", train_ids}, {"test", test_ids}};
      write_file((fs::path(o.out) / "split.json").string(), split.dump(2) + "\n");
      std::cout << "trained on " << train_part.size() << " rows (" << train_ids.size() << " samples), best epoch "
                << rep.best_epoch << ", validation AUC " << rep.best_val_auc << "\n";
      return kOk;
    }

    if (cmd == "eval") {
      if (!fs::exists(o.model)) {
        std::cerr << "hspp eval: error: no trained model at " << o.model << " (run hspp train first)\n";
        return kIo;
      }
      const auto model = load_model(o.model);
      auto examples = to_examples(read_feature_rows(o.features));
      if (!o.split.empty()) {
        const auto test_ids = read_split(o.split);
        std::erase_if(examples, [&](const LabeledExample& e) { return !test_ids.count(e.sample_id); });
      }
      const auto preds = predict(model, examples);
      auto rep = evaluate(preds);
      rep.config = cfg.to_json();
      rep.config["model_config"] = model.config_echo;
      rep.config["feature_schema_hash"] = hex64(feature_schema_hash());
      if (fs::is_directory(cfg.assets)) {
        const auto assets = Assets::load(cfg.assets);
        rep.config["stopwords_hash"] = hex64(assets.stopwords.hash());
        rep.config["lexicons_hash"] = hex64(assets.lexicons.hash());
      }
      fs::create_directories(o.out);
      write_file((fs::path(o.out) / "predictions.jsonl").string(), format_predictions(preds));
      if (cfg.eval.importance) {
        std::vector<LabeledExample> rows = examples;
        if (cfg.eval.importance_max_rows > 0 && rows.size() > cfg.eval.importance_max_rows) {
          rows = split_by_sample(examples, 1.0 - static_cast<double>(cfg.eval.importance_max_rows) /
                                                     static_cast<double>(examples.size()),
                                 derive_seed(cfg.seed, "importance/rows"))
                     .first;
        }
        rep.importance = permutation_importance(
            model, rows, binary_auc_metric,
            {cfg.eval.importance_repeats, derive_seed(cfg.seed, "importance"), cfg.threads});
      }
      write_file((fs::path(o.out) / "eval_report.json").string(), rep.to_json().dump(2) + "\n");
      std::string rendered = rep.render();
      if (cfg.eval.ablation) {
        const auto assets = Assets::load(cfg.assets);
        const auto manifest = read_manifest(cfg.manifest);
        const auto samples = load_samples(manifest, assets, cfg.toggles, cfg.threads);
        const auto rows = chunking_ablation(ablation_samples(samples, assets), cfg.train, cfg.eval.test_fraction);
        write_file((fs::path(o.out) / "ablation.json").string(), ablation_json(rows).dump(2) + "\n");
        rendered += "\n" + render_ablation(rows);
      }
      write_file((fs::path(o.out) / "report.txt").string(), rendered);
      std::cout << rendered;
      return kOk;
    }

    if (cmd == "report") {
      const auto j = nlohmann::json::parse(read_file(o.eval_report));
      std::string rendered = EvalReport::from_json(j).render();
      if (!o.ablation_report.empty()) {
        std::vector<AblationRow> rows;
        for (const auto& r : nlohmann::json::parse(read_file(o.ablation_report))) rows.push_back(AblationRow::from_json(r));
        rendered += "\n" + render_ablation(rows);
      }
      if (!o.out.empty()) {
        ensure_parent(o.out);
        write_file(o.out, rendered);
      }
      std::cout << rendered;
      return kOk;
    }
  } catch (const Error& e) {
    std::cerr << "hspp " << cmd << ": error: " << e.what() << "\n";
    return exit_for(e);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "hspp " << cmd << ": error: " << e.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "hspp " << cmd << ": error: " << e.what() << "\n";
    return kIo;
  }
  return kOk;
}
