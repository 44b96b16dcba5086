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

#include "llmda/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "llmda/error.hpp"

namespace llmda {

namespace {

void check_inputs(std::span<const double> probs, std::span<const int> labels) {
  if (probs.size() != labels.size()) {
    throw LengthMismatch(probs.size(), labels.size());
  }
  if (probs.empty()) throw InvalidArgument("metrics need at least one sample");
  for (int y : labels) {
    if (y != 0 && y != 1) throw InvalidArgument("labels must be 0 or 1");
  }
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double compute_auc(std::span<const double> probs, std::span<const int> labels) {
  check_inputs(probs, labels);
  const std::size_t n = probs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return probs[a] < probs[b];
  });
  // Average 1-based rank per tie group.
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && probs[order[j]] == probs[order[i]]) ++j;
    double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) rank[order[k]] = avg;
    i = j;
  }
  double pos = 0, rank_sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == 1) {
      pos += 1;
      rank_sum += rank[i];
    }
  }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0 || neg == 0) throw SingleClassError();
  return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

MetricsReport compute_metrics(std::span<const double> probs,
                              std::span<const int> labels, double threshold) {
  check_inputs(probs, labels);
  MetricsReport r;
  r.threshold = threshold;
  r.n = probs.size();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    bool predicted = probs[i] >= threshold;
    bool actual = labels[i] == 1;
    if (predicted && actual) ++r.tp;
    if (predicted && !actual) ++r.fp;
    if (!predicted && !actual) ++r.tn;
    if (!predicted && actual) ++r.fn;
  }
  r.plus_recall = ratio(r.tp, r.tp + r.fn);
  r.minus_recall = ratio(r.tn, r.tn + r.fp);
  r.precision = ratio(r.tp, r.tp + r.fp);
  double pr = r.precision + r.plus_recall;
  r.f1 = pr == 0.0 ? 0.0 : 2.0 * r.precision * r.plus_recall / pr;
  try {
    r.auc = compute_auc(probs, labels);
  } catch (const SingleClassError&) {
    r.auc.reset();
  }
  return r;
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["auc"] = r.auc ? nlohmann::json(*r.auc * 100.0) : nlohmann::json(nullptr);
  j["f1"] = r.f1 * 100.0;
  j["plus_recall"] = r.plus_recall * 100.0;
  j["minus_recall"] = r.minus_recall * 100.0;
  j["precision"] = r.precision * 100.0;
  j["tp"] = r.tp;
  j["fp"] = r.fp;
  j["tn"] = r.tn;
  j["fn"] = r.fn;
  j["n"] = r.n;
  j["threshold"] = r.threshold;
  for (const auto& [k, v] : r.tags) j[k] = v;
  return j;
}

namespace {

MetricSpread spread(const std::vector<double>& xs) {
  MetricSpread s;
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) /
           static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stdev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

nlohmann::json spread_json(const MetricSpread& s) {
  return {{"mean", s.mean * 100.0}, {"stdev", s.stdev * 100.0}};
}

}  // namespace

RunSummary summarize_runs(std::span<const MetricsReport> reports) {
  RunSummary s;
  s.runs = reports.size();
  std::vector<double> auc, f1, pr, mr;
  bool all_auc = !reports.empty();
  for (const auto& r : reports) {
    if (r.auc) {
      auc.push_back(*r.auc);
    } else {
      all_auc = false;
    }
    f1.push_back(r.f1);
    pr.push_back(r.plus_recall);
    mr.push_back(r.minus_recall);
  }
  if (all_auc) s.auc = spread(auc);
  s.f1 = spread(f1);
  s.plus_recall = spread(pr);
  s.minus_recall = spread(mr);
  return s;
}

nlohmann::json to_json(const RunSummary& s) {
  return {
      {"runs", s.runs},
      {"auc", s.auc ? spread_json(*s.auc) : nlohmann::json(nullptr)},
      {"f1", spread_json(s.f1)},
      {"plus_recall", spread_json(s.plus_recall)},
      {"minus_recall", spread_json(s.minus_recall)},
  };
}

}  // namespace llmda
