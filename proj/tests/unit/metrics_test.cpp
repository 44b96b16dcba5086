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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "llmda/error.hpp"
#include "llmda/metrics.hpp"

namespace llmda {
namespace {

// Counts every (security, non-security) pair: 1 when the security score is
// higher, 0.5 on a tie.
double pair_count_auc(const std::vector<double>& p, const std::vector<int>& y) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1;
      if (p[i] > p[j]) wins += 1;
      if (p[i] == p[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

void random_pairs(std::mt19937_64& rng, std::size_t n, bool coarse,
                  std::vector<double>& p, std::vector<int>& y) {
  std::uniform_real_distribution<double> u(0, 1);
  std::bernoulli_distribution coin(0.4);
  p.resize(n);
  y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = coarse ? std::round(u(rng) * 10) / 10 : u(rng);
    y[i] = coin(rng) ? 1 : 0;
  }
  y[0] = 1;
  y[1] = 0;
}

TEST(ComputeMetricsTest, PerfectPredictor) {
  std::vector<double> p = {0.9, 0.8, 0.1, 0.2};
  std::vector<int> y = {1, 1, 0, 0};
  MetricsReport r = compute_metrics(p, y, 0.5);
  EXPECT_EQ(*r.auc, 1.0);
  EXPECT_EQ(r.f1, 1.0);
  EXPECT_EQ(r.plus_recall, 1.0);
  EXPECT_EQ(r.minus_recall, 1.0);
}

TEST(ComputeMetricsTest, KnownConfusionMatrix) {
  std::vector<double> p = {0.9, 0.6, 0.4, 0.7, 0.3, 0.2};
  std::vector<int> y = {1, 1, 1, 0, 0, 0};
  MetricsReport r = compute_metrics(p, y, 0.5);
  EXPECT_EQ(r.tp, 2u);
  EXPECT_EQ(r.fn, 1u);
  EXPECT_EQ(r.fp, 1u);
  EXPECT_EQ(r.tn, 2u);
  EXPECT_EQ(r.tp + r.fp + r.tn + r.fn, r.n);
  EXPECT_NEAR(r.plus_recall, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.minus_recall, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.precision, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.f1, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(*r.auc, 7.0 / 9.0, 1e-15);  // 3 + 2 + 2 winning pairs
}

TEST(ComputeMetricsTest, AllTiesGiveHalf) {
  std::vector<double> p(7, 0.5);
  std::vector<int> y = {1, 0, 1, 0, 0, 1, 1};
  EXPECT_EQ(compute_auc(p, y), 0.5);
}

TEST(ComputeMetricsTest, AucMatchesPairCountingOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> p;
    std::vector<int> y;
    random_pairs(rng, 200, trial % 2 == 1, p, y);
    EXPECT_NEAR(compute_auc(p, y), pair_count_auc(p, y), 1e-12);
  }
}

TEST(ComputeMetricsTest, JointPermutationInvariance) {
  std::mt19937_64 rng(12);
  std::vector<double> p;
  std::vector<int> y;
  random_pairs(rng, 60, true, p, y);
  MetricsReport base = compute_metrics(p, y, 0.5);
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<double> p2;
  std::vector<int> y2;
  for (auto i : order) {
    p2.push_back(p[i]);
    y2.push_back(y[i]);
  }
  MetricsReport r = compute_metrics(p2, y2, 0.5);
  EXPECT_EQ(to_json(r), to_json(base));
}

TEST(ComputeMetricsTest, AucInvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(13);
  std::vector<double> p;
  std::vector<int> y;
  random_pairs(rng, 100, true, p, y);
  double base = compute_auc(p, y);
  for (auto f : {+[](double x) { return std::exp(3 * x); },
                 +[](double x) { return x * x * x - 2.0; },
                 +[](double x) { return std::log1p(x); }}) {
    std::vector<double> q;
    for (double x : p) q.push_back(f(x));
    EXPECT_NEAR(compute_auc(q, y), base, 1e-12);
  }
}

TEST(ComputeMetricsTest, ThresholdExtremes) {
  std::vector<double> p = {0.0, 0.3, 1.0, 0.7};
  std::vector<int> y = {1, 0, 1, 0};
  MetricsReport zero = compute_metrics(p, y, 0.0);
  EXPECT_EQ(zero.plus_recall, 1.0);
  EXPECT_EQ(zero.minus_recall, 0.0);
  MetricsReport above = compute_metrics(p, y, 1.0 + 1e-9);
  EXPECT_EQ(above.plus_recall, 0.0);
  EXPECT_EQ(above.minus_recall, 1.0);
  EXPECT_EQ(above.f1, 0.0);
}

TEST(ComputeMetricsTest, BoundaryProbabilityCountsAsSecurity) {
  std::vector<double> p = {0.5, 0.49};
  std::vector<int> y = {1, 0};
  MetricsReport r = compute_metrics(p, y, 0.5);
  EXPECT_EQ(r.tp, 1u);
  EXPECT_EQ(r.tn, 1u);
}

TEST(ComputeMetricsTest, SingleClassLeavesAucEmpty) {
  std::vector<double> p = {0.2, 0.9};
  std::vector<int> y = {1, 1};
  EXPECT_THROW(compute_auc(p, y), SingleClassError);
  MetricsReport r = compute_metrics(p, y, 0.5);
  EXPECT_FALSE(r.auc.has_value());
  EXPECT_EQ(r.plus_recall, 0.5);
  EXPECT_TRUE(to_json(r)["auc"].is_null());
}

TEST(ComputeMetricsTest, InputValidation) {
  std::vector<double> p = {0.1, 0.2};
  std::vector<int> short_y = {1};
  std::vector<int> bad_y = {1, 2};
  EXPECT_THROW(compute_metrics(p, short_y), LengthMismatch);
  EXPECT_THROW(compute_metrics(p, bad_y), InvalidArgument);
  EXPECT_THROW(compute_metrics({}, {}), InvalidArgument);
}

TEST(MetricsJsonTest, PercentScaledFlatRecord) {
  std::vector<double> p = {0.9, 0.6, 0.4, 0.7, 0.3, 0.2};
  std::vector<int> y = {1, 1, 1, 0, 0, 0};
  MetricsReport r = compute_metrics(p, y, 0.5);
  r.tags["train_source"] = "A";
  auto j = to_json(r);
  EXPECT_NEAR(j["f1"].get<double>(), 200.0 / 3.0, 1e-12);
  EXPECT_EQ(j["tp"], 2);
  EXPECT_EQ(j["n"], 6);
  EXPECT_EQ(j["train_source"], "A");
  for (const char* key : {"auc", "f1", "plus_recall", "minus_recall", "precision"}) {
    EXPECT_GE(j[key].get<double>(), 0.0);
    EXPECT_LE(j[key].get<double>(), 100.0);
  }
}

TEST(SummarizeRunsTest, MeanAndSampleStdev) {
  std::vector<MetricsReport> runs(3);
  double f1s[3] = {0.8, 0.9, 1.0};
  for (int i = 0; i < 3; ++i) {
    runs[i].f1 = f1s[i];
    runs[i].auc = 0.5;
  }
  RunSummary s = summarize_runs(runs);
  EXPECT_EQ(s.runs, 3u);
  EXPECT_NEAR(s.f1.mean, 0.9, 1e-15);
  EXPECT_NEAR(s.f1.stdev, 0.1, 1e-15);
  ASSERT_TRUE(s.auc.has_value());
  EXPECT_EQ(s.auc->stdev, 0.0);
  runs[1].auc.reset();
  EXPECT_FALSE(summarize_runs(runs).auc.has_value());
  EXPECT_NEAR(to_json(s)["f1"]["mean"].get<double>(), 90.0, 1e-12);
}

}  // namespace
}  // namespace llmda
