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

#include "llmda/experiments.hpp"

#include <algorithm>

#include "llmda/error.hpp"

namespace llmda {

MetricsReport evaluate(const std::vector<EncodedSample>& samples,
                       const TrainState& state, double threshold) {
  auto preds = predict(samples, state, threshold);
  std::vector<double> probs;
  std::vector<int> labels;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    probs.push_back(preds[i].probability);
    labels.push_back(label_value(samples[i].label));
  }
  return compute_metrics(probs, labels, threshold);
}

const std::vector<PatchSample>& evaluation_split(const DatasetSplit& split,
                                                 std::string* name) {
  auto pick = [&](const std::vector<PatchSample>& s, const char* n)
      -> const std::vector<PatchSample>& {
    if (name) *name = n;
    return s;
  };
  if (!split.test.empty()) return pick(split.test, "test");
  if (!split.validation.empty()) return pick(split.validation, "validation");
  return pick(split.train, "train");
}

namespace {

AblationRow run_one(const AblationFlags& flags, const DatasetSplit& split,
                    const HyperParams& hp, const Backends& backends,
                    const TrainOptions& base) {
  TrainOptions options = base;
  options.ablation = flags;
  options.checkpoint_dir.reset();
  TrainResult result = train(split, hp, backends, options);

  std::string split_name;
  const auto& eval_set = evaluation_split(split, &split_name);
  auto encoded = encode_samples(eval_set, backends,
                                static_cast<std::size_t>(hp.max_tokens), flags);
  AblationRow row;
  row.flags = flags;
  row.report = evaluate(encoded, result.state, options.threshold);
  row.report.tags["ablation"] = flags.name();
  row.report.tags["eval_split"] = split_name;
  row.log = std::move(result.log);
  row.fused_dim = static_cast<int>(result.state.model.classifier.w.rows());
  return row;
}

}  // namespace

std::vector<AblationRow> run_ablation(const std::vector<AblationFlags>& requested,
                                      const DatasetSplit& split,
                                      const HyperParams& hp,
                                      const Backends& backends,
                                      const TrainOptions& base) {
  std::vector<AblationFlags> grid{AblationFlags{}};
  for (const auto& f : requested) {
    if (std::find(grid.begin(), grid.end(), f) == grid.end()) grid.push_back(f);
  }
  std::vector<AblationRow> table;
  table.reserve(grid.size());
  for (const auto& f : grid) table.push_back(run_one(f, split, hp, backends, base));
  return table;
}

nlohmann::json to_json(const std::vector<AblationRow>& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table) {
    nlohmann::json log = nlohmann::json::array();
    for (const auto& r : row.log) {
      nlohmann::json j = to_json(r);
      j.erase("optimizer");
      log.push_back(std::move(j));
    }
    rows.push_back({{"name", row.flags.name()},
                    {"flags", to_json(row.flags)},
                    {"metrics", to_json(row.report)},
                    {"fused_dim", row.fused_dim},
                    {"run_log", std::move(log)}});
  }
  return rows;
}

std::string source_tag(const std::vector<PatchSample>& samples) {
  std::vector<std::string> seen;
  for (const auto& s : samples) {
    if (s.source().empty()) continue;
    if (std::find(seen.begin(), seen.end(), s.source()) == seen.end()) {
      seen.push_back(s.source());
    }
  }
  if (seen.empty()) return "unknown";
  std::string out;
  for (const auto& s : seen) {
    if (!out.empty()) out += '+';
    out += s;
  }
  return out;
}

MetricsReport cross_dataset_eval(const std::vector<PatchSample>& train_ds,
                                 const std::vector<PatchSample>& test_ds,
                                 const HyperParams& hp, const Backends& backends,
                                 const TrainOptions& options,
                                 const SplitRatios& ratios) {
  DatasetSplit train_split = split_dataset(train_ds, ratios, hp.seed);
  DatasetSplit test_split = split_dataset(test_ds, ratios, hp.seed);
  TrainOptions opts = options;
  opts.checkpoint_dir.reset();
  TrainResult result = train(train_split, hp, backends, opts);

  auto encoded = encode_samples(test_split.test, backends,
                                static_cast<std::size_t>(hp.max_tokens),
                                opts.ablation);
  MetricsReport report = evaluate(encoded, result.state, opts.threshold);
  report.tags["train_source"] = source_tag(train_ds);
  report.tags["test_source"] = source_tag(test_ds);
  return report;
}

std::vector<MetricsReport> repeated_runs(const DatasetSplit& split,
                                         const HyperParams& hp,
                                         const Backends& backends,
                                         const TrainOptions& options, int k) {
  if (k < 1) throw InvalidArgument("run count must be >= 1");
  TrainOptions opts = options;
  opts.checkpoint_dir.reset();
  const auto& eval_set = evaluation_split(split);
  std::vector<MetricsReport> out;
  for (int i = 0; i < k; ++i) {
    HyperParams run_hp = hp;
    run_hp.seed = derive_seed(hp.seed, "run", static_cast<std::uint64_t>(i));
    TrainResult result = train(split, run_hp, backends, opts);
    auto encoded = encode_samples(eval_set, backends,
                                  static_cast<std::size_t>(hp.max_tokens),
                                  opts.ablation);
    out.push_back(evaluate(encoded, result.state, opts.threshold));
    out.back().tags["run"] = std::to_string(i);
    out.back().tags["seed"] = std::to_string(run_hp.seed);
  }
  return out;
}

}  // namespace llmda
