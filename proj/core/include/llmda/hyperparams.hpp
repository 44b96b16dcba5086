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

#include <nlohmann/json.hpp>

namespace llmda {

// Training and model hyperparameters. Field names double as the keys of the
// flat config file.
struct HyperParams {
  int epochs = 20;
  double learning_rate = 1e-5;
  double weight_decay = 0.01;
  int batch_size_train = 16;
  int batch_size_eval = 64;
  double alpha = 0.5;
  // Stored and reported; no loss term consumes it.
  double temperature = 0.1;
  double dropout = 0.5;
  double margin = 0.5;
  int num_heads = 4;
  int dim = 256;
  int max_tokens = 512;
  std::uint64_t seed = 42;

  // Throws InvalidArgument naming the first violated constraint.
  void validate() const;

  bool operator==(const HyperParams&) const = default;
};

// Published training settings plus the documented defaults for margin,
// num_heads, dim and max_tokens.
HyperParams default_hyperparams();

nlohmann::json to_json(const HyperParams& hp);
// Missing keys keep their default; unknown keys are rejected. The result is
// validated.
HyperParams hyperparams_from_json(const nlohmann::json& j);

HyperParams load_hyperparams(const std::filesystem::path& path);
void save_hyperparams(const HyperParams& hp, const std::filesystem::path& path);

}  // namespace llmda
