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

#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmda_cli/config.hpp"

namespace llmda::cli {

// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

// Each command returns the summary record printed on standard output.
nlohmann::json cmd_ingest(const RunConfig& cfg);
nlohmann::json cmd_explain(const RunConfig& cfg);
nlohmann::json cmd_train(const RunConfig& cfg);
nlohmann::json cmd_eval(const RunConfig& cfg);
nlohmann::json cmd_predict(const RunConfig& cfg);
nlohmann::json cmd_visualize(const RunConfig& cfg);
nlohmann::json cmd_ablate(const RunConfig& cfg);

// Full command line (args[0] is the program name). Results go to `out` as
// one JSON document; failures go to `err` as {"error": kind, "message": ...}.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace llmda::cli
