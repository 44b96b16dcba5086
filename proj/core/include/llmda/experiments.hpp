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

#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmda/dataset.hpp"
#include "llmda/metrics.hpp"
#include "llmda/pipeline.hpp"
#include "llmda/trainer.hpp"

namespace llmda {

// Metrics of a trained state on encoded samples.
MetricsReport evaluate(const std::vector<EncodedSample>& samples,
                       const TrainState& state, double threshold = 0.5);

// The split that reports are computed on: test, else validation, else train.
const std::vector<PatchSample>& evaluation_split(const DatasetSplit& split,
                                                 std::string* name = nullptr);

struct AblationRow {
  AblationFlags flags;
  MetricsReport report;
  std::vector<EpochRecord> log;
  int fused_dim = 0;  // width of the classifier input
};

// Trains and evaluates the full model followed by each requested flag
// combination (duplicates and the full model are run once), all with the
// same seed and options. The full model is always the first row.
std::vector<AblationRow> run_ablation(const std::vector<AblationFlags>& requested,
                                      const DatasetSplit& split,
                                      const HyperParams& hp,
                                      const Backends& backends,
                                      const TrainOptions& base = {});

nlohmann::json to_json(const std::vector<AblationRow>& table);

// "+"-joined distinct source names in first-seen order, or "unknown".
std::string source_tag(const std::vector<PatchSample>& samples);

// Trains on a split of train_ds and evaluates on the test split of test_ds
// (both split with `ratios` and hp.seed). The report is tagged with
// train_source and test_source.
MetricsReport cross_dataset_eval(const std::vector<PatchSample>& train_ds,
                                 const std::vector<PatchSample>& test_ds,
                                 const HyperParams& hp, const Backends& backends,
                                 const TrainOptions& options = {},
                                 const SplitRatios& ratios = {0.8, 0.1, 0.1});

// k independent train+evaluate runs; run i uses seed
// derive_seed(hp.seed, "run", i) for everything but the data split.
std::vector<MetricsReport> repeated_runs(const DatasetSplit& split,
                                         const HyperParams& hp,
                                         const Backends& backends,
                                         const TrainOptions& options, int k);

}  // namespace llmda
