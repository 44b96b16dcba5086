// Copyright 2026 The llmda Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "llmda_cli/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "llmda/dataset.hpp"
#include "llmda/diff.hpp"
#include "llmda/error.hpp"
#include "llmda/experiments.hpp"
#include "llmda/explain.hpp"
#include "llmda/metrics.hpp"
#include "llmda/pca.hpp"
#include "llmda/pipeline.hpp"
#include "llmda/tokenizer.hpp"
#include "llmda/trainer.hpp"

namespace llmda::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kAugmentedFile = "augmented.jsonl";

void prepare_out(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec || !fs::is_directory(cfg.out)) {
    throw ConfigError("output directory is not writable: " + cfg.out.string());
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("cannot write " + path.string());
}

fs::path require_dataset_path(const RunConfig& cfg) {
  if (!cfg.dataset) throw ConfigError("config key 'dataset' is not set");
  if (!fs::exists(*cfg.dataset)) {
    throw ConfigError("dataset does not exist: " + cfg.dataset->string());
  }
  return *cfg.dataset;
}

// Training-side commands read the augmented dataset when `explain` produced
// one, else the configured dataset.
fs::path input_dataset_path(const RunConfig& cfg) {
  fs::path augmented = cfg.out / kAugmentedFile;
  if (fs::exists(augmented)) return augmented;
  return require_dataset_path(cfg);
}

void require_checkpoint(const RunConfig& cfg) {
  if (!fs::exists(cfg.checkpoint)) throw MissingArtifact(cfg.checkpoint.string());
}

Backends make_backends(const RunConfig& cfg, int dim) {
  EmbedderBackend backend = cfg.embedder;
  backend.dim = dim;
  return {std::make_shared<HashedVocabTokenizer>(),
          std::make_shared<Embedder>(backend)};
}

DatasetSplit split_of(const RunConfig& cfg, const std::vector<PatchSample>& s) {
  return split_dataset(s, cfg.ratios, cfg.seed, cfg.stratify);
}

const std::vector<PatchSample>& named_split(const DatasetSplit& split,
                                            const std::string& name) {
  if (name == "train") return split.train;
  if (name == "validation") return split.validation;
  return split.test;
}

json class_counts_json(const ClassCounts& c) {
  return {{"security", c.security},
          {"non_security", c.non_security},
          {"total", c.total()}};
}

json stats_json(const ExplainStats& s) {
  return {{"cache_hits", s.cache_hits},
          {"cache_misses", s.cache_misses},
          {"backend_calls", s.backend_calls},
          {"failures", s.failures}};
}

}  // namespace

json cmd_ingest(const RunConfig& cfg) {
  const fs::path path = require_dataset_path(cfg);
  prepare_out(cfg);
  auto samples = load_dataset(path);

  std::size_t parsed = 0, malformed = 0, hunks = 0, added = 0, removed = 0;
  std::size_t truncated = 0;
  HashedVocabTokenizer tokenizer;
  for (const auto& s : samples) {
    try {
      ParsedDiff d = parse_unified_diff(s.diff_text());
      ++parsed;
      hunks += d.hunks.size();
      added += d.added_lines();
      removed += d.removed_lines();
    } catch (const MalformedDiff&) {
      ++malformed;
    }
    if (tokenizer.encode(s.diff_text()).size() >
        static_cast<std::size_t>(cfg.hp.max_tokens)) {
      ++truncated;
    }
  }
  DatasetSplit split = split_of(cfg, samples);

  json by_source = json::object();
  for (const auto& [source, counts] : count_by_source(samples)) {
    by_source[source.empty() ? "unknown" : source] = class_counts_json(counts);
  }
  json summary = {
      {"dataset", path.string()},
      {"seed", cfg.seed},
      {"classes", class_counts_json(count_classes(samples))},
      {"by_source", by_source},
      {"splits",
       {{"train", split.train.size()},
        {"validation", split.validation.size()},
        {"test", split.test.size()}}},
      {"diffs",
       {{"parsed", parsed},
        {"malformed", malformed},
        {"hunks", hunks},
        {"added_lines", added},
        {"removed_lines", removed}}},
      {"max_tokens", cfg.hp.max_tokens},
      {"patches_truncated", truncated},
  };
  write_json(cfg.out / "dataset_summary.json", summary);
  summary["summary_path"] = (cfg.out / "dataset_summary.json").string();
  return summary;
}

json cmd_explain(const RunConfig& cfg) {
  const fs::path path = require_dataset_path(cfg);
  prepare_out(cfg);
  auto samples = load_dataset(path);
  Explainer explainer(cfg.explainer);
  std::vector<std::string> failed;
  for (auto& s : samples) {
    try {
      s.set_explanation(explainer.explain(s));
    } catch (const ServiceUnavailable&) {
      // The sample keeps whatever explanation it came with.
      failed.push_back(s.id());
    }
  }
  const fs::path out_path = cfg.out / kAugmentedFile;
  save_dataset(samples, out_path);
  json summary = stats_json(explainer.stats());
  summary["seed"] = cfg.seed;
  summary["samples"] = samples.size();
  summary["failed_ids"] = failed;
  summary["augmented_path"] = out_path.string();
  write_json(cfg.out / "explain_summary.json", summary);
  return summary;
}

json cmd_train(const RunConfig& cfg) {
  const fs::path path = input_dataset_path(cfg);
  prepare_out(cfg);
  auto samples = load_dataset(path);
  DatasetSplit split = split_of(cfg, samples);

  TrainOptions options = cfg.train;
  options.checkpoint_dir = cfg.out / "checkpoints";
  TrainResult result = train(split, cfg.hp, make_backends(cfg, cfg.hp.dim), options);

  const fs::path log_path = cfg.out / "run_log.jsonl";
  write_run_log(result.log, options.optimizer, log_path);
  save_checkpoint(result.state, cfg.checkpoint);

  json summary = {
      {"checkpoint", cfg.checkpoint.string()},
      {"run_log", log_path.string()},
      {"epochs", result.state.epoch},
      {"seed", cfg.seed},
      {"dataset", path.string()},
  };
  if (!result.log.empty()) summary["final"] = to_json(result.log.back());
  if (result.best_checkpoint) summary["best_checkpoint"] = result.best_checkpoint->string();
  return summary;
}

json cmd_eval(const RunConfig& cfg) {
  const fs::path path = input_dataset_path(cfg);
  if (cfg.eval_test_dataset && !fs::exists(*cfg.eval_test_dataset)) {
    throw ConfigError("eval.test_dataset does not exist: " +
                      cfg.eval_test_dataset->string());
  }
  if (cfg.eval_runs == 1) require_checkpoint(cfg);
  prepare_out(cfg);
  auto samples = load_dataset(path);
  DatasetSplit split = split_of(cfg, samples);
  json record = {{"seed", cfg.seed}, {"dataset", path.string()}};

  if (cfg.eval_runs > 1) {
    auto reports = repeated_runs(split, cfg.hp, make_backends(cfg, cfg.hp.dim),
                                 cfg.train, cfg.eval_runs);
    json runs = json::array();
    for (const auto& r : reports) runs.push_back(to_json(r));
    record["runs"] = runs;
    record["summary"] = to_json(summarize_runs(reports));
  } else {
    TrainState state = load_checkpoint(cfg.checkpoint);
    Backends backends = make_backends(cfg, state.hp.dim);
    std::vector<PatchSample> eval_set;
    MetricsReport report;
    if (cfg.eval_test_dataset) {
      auto other = load_dataset(*cfg.eval_test_dataset);
      eval_set = split_of(cfg, other).test;
      record["split"] = "test";
      record["test_dataset"] = cfg.eval_test_dataset->string();
      auto encoded = encode_samples(eval_set, backends,
                                    static_cast<std::size_t>(state.hp.max_tokens),
                                    state.options.ablation);
      report = evaluate(encoded, state, cfg.train.threshold);
      report.tags["train_source"] = source_tag(samples);
      report.tags["test_source"] = source_tag(other);
    } else {
      eval_set = named_split(split, cfg.eval_split);
      record["split"] = cfg.eval_split;
      auto encoded = encode_samples(eval_set, backends,
                                    static_cast<std::size_t>(state.hp.max_tokens),
                                    state.options.ablation);
      report = evaluate(encoded, state, cfg.train.threshold);
    }
    record["checkpoint"] = cfg.checkpoint.string();
    record["metrics"] = to_json(report);
  }
  const fs::path out_path = cfg.out / "metrics.json";
  write_json(out_path, record);
  record["metrics_path"] = out_path.string();
  return record;
}

json cmd_predict(const RunConfig& cfg) {
  if (!cfg.predict_diff && !cfg.predict_record) {
    throw ConfigError("predict needs --diff <file> or --record <id>");
  }
  if (cfg.predict_diff && !fs::exists(*cfg.predict_diff)) {
    throw ConfigError("diff file does not exist: " + cfg.predict_diff->string());
  }
  require_checkpoint(cfg);
  TrainState state = load_checkpoint(cfg.checkpoint);

  std::optional<PatchSample> sample;
  if (cfg.predict_diff) {
    std::ifstream in(*cfg.predict_diff, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    parse_unified_diff(ss.str());  // rejects malformed input up front
    sample.emplace(cfg.predict_diff->filename().string(), ss.str(),
                   Label::kNonSecurity);
    if (!state.options.ablation.no_explanation) {
      Explainer explainer(cfg.explainer);
      sample->set_explanation(explainer.explain(*sample));
    }
  } else {
    for (auto& s : load_dataset(input_dataset_path(cfg))) {
      if (s.id() == *cfg.predict_record) sample = std::move(s);
    }
    if (!sample) throw ConfigError("no record with id '" + *cfg.predict_record + "'");
  }
  auto preds = predict({*sample}, state, make_backends(cfg, state.hp.dim),
                       cfg.train.threshold);
  return {{"id", preds[0].sample_id},
          {"probability", preds[0].probability},
          {"label", label_name(preds[0].label)},
          {"threshold", cfg.train.threshold},
          {"seed", cfg.seed}};
}

json cmd_visualize(const RunConfig& cfg) {
  const fs::path path = input_dataset_path(cfg);
  require_checkpoint(cfg);
  prepare_out(cfg);
  TrainState state = load_checkpoint(cfg.checkpoint);
  auto samples = load_dataset(path);
  std::vector<PatchSample> selected =
      cfg.visualize_split == "all" ? samples
                                   : named_split(split_of(cfg, samples),
                                                 cfg.visualize_split);
  auto encoded = encode_samples(selected, make_backends(cfg, state.hp.dim),
                                static_cast<std::size_t>(state.hp.max_tokens),
                                state.options.ablation);
  auto fused = fused_embeddings(encoded, state);
  PcaResult pca = pca_project(fused, cfg.visualize_components);

  std::vector<std::string> ids;
  std::vector<Label> labels;
  for (const auto& s : selected) {
    ids.push_back(s.id());
    labels.push_back(s.label());
  }
  const fs::path csv = cfg.out / "pca.csv";
  write_pca_csv(csv, pca, ids, labels);
  json meta = {
      {"seed", cfg.seed},
      {"split", cfg.visualize_split},
      {"n", selected.size()},
      {"components_requested", cfg.visualize_components},
      {"rank", pca.rank},
      {"degenerate", pca.degenerate},
      {"explained_variance_ratio",
       std::vector<double>(pca.explained_variance_ratio.data(),
                           pca.explained_variance_ratio.data() +
                               pca.explained_variance_ratio.size())},
      {"csv", csv.string()},
  };
  write_json(cfg.out / "pca_meta.json", meta);
  return meta;
}

json cmd_ablate(const RunConfig& cfg) {
  const fs::path path = input_dataset_path(cfg);
  prepare_out(cfg);
  auto samples = load_dataset(path);
  auto table = run_ablation(cfg.ablate_flags, split_of(cfg, samples), cfg.hp,
                            make_backends(cfg, cfg.hp.dim), cfg.train);
  json record = {{"seed", cfg.seed}, {"dataset", path.string()},
                 {"rows", to_json(table)}};
  const fs::path out_path = cfg.out / "ablation.json";
  write_json(out_path, record);
  json summary = {{"ablation_path", out_path.string()}, {"seed", cfg.seed}};
  json rows = json::array();
  for (const auto& row : table) {
    rows.push_back({{"name", row.flags.name()}, {"metrics", to_json(row.report)}});
  }
  summary["rows"] = rows;
  return summary;
}

namespace {

void emit_error(std::ostream& err, const std::string& kind,
                const std::string& message, const json& extra = json::object()) {
  json j = {{"error", kind}, {"message", message}};
  for (const auto& [k, v] : extra.items()) j[k] = v;
  err << j.dump() << '\n';
}

// Splits `--key value` / `--key=value` pairs left over after the fixed flags.
std::vector<std::pair<std::string, std::string>> override_pairs(
    const std::vector<std::string>& extras) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& a = extras[i];
    if (a.rfind("--", 0) != 0 || a.size() < 3) {
      throw ConfigError("unexpected argument '" + a + "'");
    }
    std::string key = a.substr(2);
    auto eq = key.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(key.substr(0, eq), key.substr(eq + 1));
      continue;
    }
    if (i + 1 >= extras.size()) throw ConfigError("option '" + a + "' needs a value");
    out.emplace_back(key, extras[++i]);
  }
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Silent security patch detection: ingest, explain, train, "
               "evaluate, predict, visualize and ablate."};
  app.name(args.empty() ? "llmda" : args[0]);
  app.require_subcommand(1);
  app.fallthrough();
  app.allow_extras();

  std::string config_path, seed, out_dir;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--seed", seed, "Root seed; overrides every config seed");
  app.add_option("--out", out_dir, "Output directory");

  using Command = std::function<json(const RunConfig&)>;
  const std::vector<std::tuple<std::string, std::string, Command>> commands = {
      {"ingest", "Load and summarize a dataset", cmd_ingest},
      {"explain", "Generate and cache patch explanations", cmd_explain},
      {"train", "Train a model and write checkpoints", cmd_train},
      {"eval", "Evaluate a checkpoint", cmd_eval},
      {"predict", "Score one diff (--diff) or dataset record (--record)",
       cmd_predict},
      {"visualize", "Export a PCA projection of fused embeddings", cmd_visualize},
      {"ablate", "Run the ablation grid", cmd_ablate},
  };
  std::map<CLI::App*, Command> handlers;
  for (const auto& [name, help, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->allow_extras();
    handlers[sub] = fn;
  }

  std::vector<std::string> argv_rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    emit_error(err, "ConfigError", e.what());
    return kExitConfig;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    json tree = default_config();
    if (!config_path.empty()) merge_config(tree, read_config_file(config_path));
    std::vector<std::string> extras = app.remaining();
    for (const auto& [key, value] : override_pairs(extras)) {
      apply_override(tree, key, value);
    }
    if (!seed.empty()) apply_override(tree, "seed", seed);
    if (!out_dir.empty()) apply_override(tree, "out", out_dir);
    RunConfig cfg = resolve_config(std::move(tree));

    json result = handlers.at(sub)(cfg);
    out << result.dump(2) << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    emit_error(err, e.kind(), e.what());
    return kExitConfig;
  } catch (const MissingArtifact& e) {
    emit_error(err, e.kind(), e.what(), {{"path", e.path()}});
    return kExitFailure;
  } catch (const Error& e) {
    emit_error(err, e.kind(), e.what());
    return kExitFailure;
  } catch (const std::exception& e) {
    emit_error(err, "InternalError", e.what());
    return kExitFailure;
  }
}

}  // namespace llmda::cli
