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

#include "llmda/hyperparams.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <string>

#include "llmda/error.hpp"

namespace llmda {

void HyperParams::validate() const {
  auto fail = [](const std::string& what) {
    throw InvalidArgument("invalid hyperparameters: " + what);
  };
  if (epochs < 1) fail("epochs must be >= 1");
  // Zero is accepted so a frozen run can be expressed.
  if (!std::isfinite(learning_rate) || learning_rate < 0.0) {
    fail("learning_rate must be >= 0");
  }
  if (!std::isfinite(weight_decay) || weight_decay < 0.0) {
    fail("weight_decay must be >= 0");
  }
  if (batch_size_train < 1) fail("batch_size_train must be >= 1");
  if (batch_size_eval < 1) fail("batch_size_eval must be >= 1");
  if (!std::isfinite(alpha) || alpha < 0.0 || alpha > 1.0) {
    fail("alpha must lie in [0, 1]");
  }
  if (!std::isfinite(temperature) || temperature <= 0.0) {
    fail("temperature must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (!(margin >= 0.0) || !std::isfinite(margin)) fail("margin must be >= 0");
  if (num_heads < 1) fail("num_heads must be >= 1");
  if (dim < 1) fail("dim must be >= 1");
  if (dim % num_heads != 0) {
    fail("dim " + std::to_string(dim) + " is not divisible by num_heads " +
         std::to_string(num_heads));
  }
  if (max_tokens < 1) fail("max_tokens must be >= 1");
}

HyperParams default_hyperparams() { return HyperParams{}; }

nlohmann::json to_json(const HyperParams& hp) {
  return nlohmann::json{
      {"epochs", hp.epochs},
      {"learning_rate", hp.learning_rate},
      {"weight_decay", hp.weight_decay},
      {"batch_size_train", hp.batch_size_train},
      {"batch_size_eval", hp.batch_size_eval},
      {"alpha", hp.alpha},
      {"temperature", hp.temperature},
      {"dropout", hp.dropout},
      {"margin", hp.margin},
      {"num_heads", hp.num_heads},
      {"dim", hp.dim},
      {"max_tokens", hp.max_tokens},
      {"seed", hp.seed},
  };
}

namespace {

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if constexpr (std::is_floating_point_v<T>) {
    if (!it->is_number()) {
      throw InvalidArgument(std::string("hyperparameter '") + key +
                            "' must be a number");
    }
  } else {
    if (!it->is_number_integer() && !it->is_number_unsigned()) {
      throw InvalidArgument(std::string("hyperparameter '") + key +
                            "' must be an integer");
    }
  }
  out = it->get<T>();
}

}  // namespace

HyperParams hyperparams_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("hyperparameters must be an object");
  static const std::set<std::string> kKeys = {
      "epochs",     "learning_rate", "weight_decay",    "batch_size_train",
      "batch_size_eval", "alpha",    "temperature",     "dropout",
      "margin",     "num_heads",     "dim",             "max_tokens",
      "seed"};
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.contains(key)) {
      throw InvalidArgument("unknown hyperparameter '" + key + "'");
    }
  }
  HyperParams hp;
  read_field(j, "epochs", hp.epochs);
  read_field(j, "learning_rate", hp.learning_rate);
  read_field(j, "weight_decay", hp.weight_decay);
  read_field(j, "batch_size_train", hp.batch_size_train);
  read_field(j, "batch_size_eval", hp.batch_size_eval);
  read_field(j, "alpha", hp.alpha);
  read_field(j, "temperature", hp.temperature);
  read_field(j, "dropout", hp.dropout);
  read_field(j, "margin", hp.margin);
  read_field(j, "num_heads", hp.num_heads);
  read_field(j, "dim", hp.dim);
  read_field(j, "max_tokens", hp.max_tokens);
  read_field(j, "seed", hp.seed);
  hp.validate();
  return hp;
}

HyperParams load_hyperparams(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return hyperparams_from_json(j);
}

void save_hyperparams(const HyperParams& hp,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json(hp).dump(2) << '\n';
}

}  // namespace llmda
