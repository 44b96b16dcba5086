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

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace llmda {

// Binary detection metrics; the security class is the positive class.
struct MetricsReport {
  std::optional<double> auc;  // empty when only one class is present
  double f1 = 0.0;
  double plus_recall = 0.0;   // tp / (tp + fn)
  double minus_recall = 0.0;  // tn / (tn + fp)
  double precision = 0.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0, n = 0;
  double threshold = 0.5;
  // Free-form provenance, e.g. {"train_source": "A", "test_source": "B"}.
  std::map<std::string, std::string> tags;
};

// Mann-Whitney statistic: probability that a random security sample scores
// above a random non-security one, ties counting one half. Labels are 0/1.
// Throws SingleClassError when a class is absent.
double compute_auc(std::span<const double> probs, std::span<const int> labels);

// Predicted security iff prob >= threshold. A ratio with a zero denominator
// is reported as 0. AUC is left empty for single-class input.
MetricsReport compute_metrics(std::span<const double> probs,
                              std::span<const int> labels,
                              double threshold = 0.5);

// Flat record; rates are percent-scaled (x100) to mirror the usual results
// table layout, counts are raw.
nlohmann::json to_json(const MetricsReport& report);

struct MetricSpread {
  double mean = 0.0;
  double stdev = 0.0;  // sample standard deviation; 0 for a single run
};

struct RunSummary {
  std::size_t runs = 0;
  std::optional<MetricSpread> auc;
  MetricSpread f1, plus_recall, minus_recall;
};

// Mean and spread over k repeated runs.
RunSummary summarize_runs(std::span<const MetricsReport> reports);
nlohmann::json to_json(const RunSummary& summary);

}  // namespace llmda
