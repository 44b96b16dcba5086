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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmda/dataset.hpp"
#include "llmda/embedder.hpp"
#include "llmda/explain.hpp"
#include "llmda/hyperparams.hpp"
#include "llmda/pipeline.hpp"
#include "llmda/trainer.hpp"

namespace llmda::cli {

// Every recognised key with its default. A user config file is merged into
// this tree; keys absent here are rejected.
nlohmann::json default_config();

// Deep-merges `user` into `base`. Throws ConfigError naming the first
// unknown key.
void merge_config(nlohmann::json& base, const nlohmann::json& user);

// Reads a JSON config file; throws ConfigError if unreadable or invalid.
nlohmann::json read_config_file(const std::filesystem::path& path);

// Sets one key from a command-line flag. `key` is either a dotted path
// ("hyperparams.epochs") or a bare name, resolved in this order: a top-level
// scalar key, a hyperparameter, then a leaf that occurs exactly once in the
// tree. The raw text is kept verbatim for string-valued keys, split on commas
// for list-valued keys and parsed as JSON otherwise.
void apply_override(nlohmann::json& tree, const std::string& key,
                    const std::string& value);

struct RunConfig {
  nlohmann::json tree;  // fully resolved, as echoed into output artifacts
  std::optional<std::filesystem::path> dataset;
  std::filesystem::path out;
  std::uint64_t seed = 0;
  SplitRatios ratios{0.8, 0.1, 0.1};
  bool stratify = true;
  ExplainerConfig explainer;
  EmbedderBackend embedder;
  HyperParams hp;
  TrainOptions train;
  std::filesystem::path checkpoint;  // defaults to <out>/model.ckpt

  std::string eval_split = "test";
  int eval_runs = 1;
  std::optional<std::filesystem::path> eval_test_dataset;

  std::optional<std::filesystem::path> predict_diff;
  std::optional<std::string> predict_record;

  std::string visualize_split = "all";
  int visualize_components = 2;

  std::vector<AblationFlags> ablate_flags;
};

// Validates and types the merged tree. The root seed is the "seed" key when
// set, otherwise hyperparams.seed; it is written back to both. Throws
// ConfigError.
RunConfig resolve_config(nlohmann::json tree);

}  // namespace llmda::cli
