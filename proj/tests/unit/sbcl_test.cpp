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

#include <cmath>
#include <algorithm>
#include <numeric>
#include <tuple>
#include <set>

#include "llmda/error.hpp"
#include "llmda/sbcl.hpp"
#include "test_support.hpp"

namespace llmda {
namespace {

using Eigen::VectorXd;

double loop_distance(const VectorXd& a, const VectorXd& b) {
  double s = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Exhaustive search over every (positive, negative) pair per anchor, keeping
// the pair that is lexicographically best under (max d_ap, min d_an, lowest
// indices).
std::vector<Triplet> brute_force_triplets(const std::vector<FusedEmbedding>& batch,
                                          const std::vector<Label>& labels) {
  std::vector<Triplet> out;
  const std::size_t n = batch.size();
  for (std::size_t a = 0; a < n; ++a) {
    if (labels[a] != Label::kSecurity) continue;
    bool have = false;
    Triplet best;
    double best_ap = 0, best_an = 0;
    for (std::size_t p = 0; p < n; ++p) {
      if (p == a || labels[p] != Label::kSecurity) continue;
      for (std::size_t q = 0; q < n; ++q) {
        if (labels[q] != Label::kNonSecurity) continue;
        double ap = loop_distance(batch[a].values(), batch[p].values());
        double an = loop_distance(batch[a].values(), batch[q].values());
        bool better = !have || ap > best_ap ||
                      (ap == best_ap && p < best.positive) ||
                      (ap == best_ap && p == best.positive &&
                       (an < best_an || (an == best_an && q < best.negative)));
        if (better) {
          have = true;
          best = {a, p, q};
          best_ap = ap;
          best_an = an;
        }
      }
    }
    out.push_back(best);
  }
  return out;
}

FusedEmbedding vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return FusedEmbedding(v);
}

struct RandomBatch {
  std::vector<FusedEmbedding> embeddings;
  std::vector<Label> labels;
};

// At least 2 security and 1 non-security sample; optionally snaps values to a
// coarse grid so exact distance ties occur.
RandomBatch random_batch(Rng& rng, std::size_t max_size, int dim, bool grid) {
  std::uniform_int_distribution<std::size_t> size(3, max_size);
  std::size_t n = size(rng);
  RandomBatch b;
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<int> cell(-2, 2);
  std::normal_distribution<double> normal(0, 1);
  for (std::size_t i = 0; i < n; ++i) {
    VectorXd v(dim);
    for (int k = 0; k < dim; ++k) v[k] = grid ? cell(rng) : normal(rng);
    b.embeddings.emplace_back(v);
    b.labels.push_back(i < 2 ? Label::kSecurity
                       : i == 2 ? Label::kNonSecurity
                                : (coin(rng) ? Label::kSecurity : Label::kNonSecurity));
  }
  // Shuffle positions so the forced members are not always first.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  RandomBatch shuffled;
  for (auto i : order) {
    shuffled.embeddings.push_back(b.embeddings[i]);
    shuffled.labels.push_back(b.labels[i]);
  }
  return shuffled;
}

TEST(EuclideanDistanceTest, Examples) {
  EXPECT_EQ(euclidean_distance(vec({0, 0, 0, 0}), vec({3, 4, 0, 0})), 5.0);
  FusedEmbedding x = vec({1.5, -2, 7});
  EXPECT_EQ(euclidean_distance(x, x), 0.0);
  EXPECT_THROW(euclidean_distance(vec({1, 2}), vec({1, 2, 3})), LengthMismatch);
}

TEST(EuclideanDistanceTest, MatchesScalarLoop) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    VectorXd a = testing::random_matrix(12, 1, rng), b = testing::random_matrix(12, 1, rng);
    EXPECT_NEAR(euclidean_distance(a, b), loop_distance(a, b), 1e-12);
  }
}

TEST(MineTripletsTest, HandPlacedBatch) {
  // a=0 and b=1 are security at distance 2; c=2 at 0.5 and d=3 at 3 from a.
  std::vector<FusedEmbedding> batch = {vec({0, 0}), vec({2, 0}), vec({0, 0.5}),
                                       vec({0, -3})};
  std::vector<Label> labels = {Label::kSecurity, Label::kSecurity,
                               Label::kNonSecurity, Label::kNonSecurity};
  Rng rng(0);
  auto t = mine_triplets(batch, labels, rng);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0], (Triplet{0, 1, 2}));
  EXPECT_EQ(t, brute_force_triplets(batch, labels));
}

TEST(MineTripletsTest, InsufficientMembers) {
  Rng rng(0);
  std::vector<FusedEmbedding> batch = {vec({0}), vec({1}), vec({2})};
  try {
    mine_triplets(batch, std::vector<Label>{Label::kSecurity, Label::kNonSecurity,
                                            Label::kNonSecurity},
                  rng);
    FAIL();
  } catch (const InsufficientClassMembers& e) {
    EXPECT_EQ(e.missing_class(), "security");
  }
  try {
    mine_triplets(batch, std::vector<Label>(3, Label::kSecurity), rng);
    FAIL();
  } catch (const InsufficientClassMembers& e) {
    EXPECT_EQ(e.missing_class(), "non-security");
  }
}

TEST(MineTripletsTest, TiesPickLowestIndex) {
  std::vector<FusedEmbedding> batch = {vec({1, 0}), vec({0, 0}), vec({-1, 0}),
                                       vec({0, 1}), vec({0, -1})};
  std::vector<Label> labels = {Label::kNonSecurity, Label::kSecurity,
                               Label::kSecurity, Label::kNonSecurity,
                               Label::kNonSecurity};
  Rng rng(0);
  auto t = mine_triplets(batch, labels, rng);
  // Anchor 1: all three negatives at distance 1, so index 0 wins.
  EXPECT_EQ(t[0], (Triplet{1, 2, 0}));
}

TEST(MineTripletsTest, MatchesBruteForceOnRandomBatches) {
  Rng rng(2026);
  for (int trial = 0; trial < 300; ++trial) {
    RandomBatch b = random_batch(rng, 12, 3, trial % 2 == 0);
    Rng mining(0);
    ASSERT_EQ(mine_triplets(b.embeddings, b.labels, mining),
              brute_force_triplets(b.embeddings, b.labels))
        << "trial " << trial;
  }
}

TEST(MineTripletsTest, InvariantToPermutingNonAnchorPositions) {
  Rng rng(3);
  RandomBatch b = random_batch(rng, 10, 4, false);
  Rng m0(0);
  auto base = mine_triplets(b.embeddings, b.labels, m0);
  auto ids = [](const RandomBatch& rb, const std::vector<Triplet>& ts,
                const std::vector<std::size_t>& origin) {
    std::set<std::tuple<std::size_t, std::size_t, std::size_t>> out;
    for (auto t : ts) out.insert({origin[t.anchor], origin[t.positive], origin[t.negative]});
    (void)rb;
    return out;
  };
  std::vector<std::size_t> identity(b.labels.size());
  std::iota(identity.begin(), identity.end(), 0);
  auto expected = ids(b, base, identity);
  // Reverse the non-security positions only.
  std::vector<std::size_t> non;
  for (std::size_t i = 0; i < b.labels.size(); ++i) {
    if (b.labels[i] == Label::kNonSecurity) non.push_back(i);
  }
  std::vector<std::size_t> origin = identity;
  for (std::size_t k = 0; k < non.size(); ++k) origin[non[k]] = non[non.size() - 1 - k];
  RandomBatch permuted;
  for (auto o : origin) {
    permuted.embeddings.push_back(b.embeddings[o]);
    permuted.labels.push_back(b.labels[o]);
  }
  Rng m1(0);
  EXPECT_EQ(ids(permuted, mine_triplets(permuted.embeddings, permuted.labels, m1), origin),
            expected);
}

TEST(MineTripletsTest, RandomOneAnchorIsSeeded) {
  Rng rng(4);
  RandomBatch b = random_batch(rng, 12, 3, false);
  Rng r1(9), r2(9);
  auto t1 = mine_triplets(b.embeddings, b.labels, r1, AnchorMode::kRandomOne);
  auto t2 = mine_triplets(b.embeddings, b.labels, r2, AnchorMode::kRandomOne);
  ASSERT_EQ(t1.size(), 1u);
  EXPECT_EQ(t1, t2);
  auto all = brute_force_triplets(b.embeddings, b.labels);
  EXPECT_NE(std::find(all.begin(), all.end(), t1[0]), all.end());
}

TEST(TripletLossTest, Examples) {
  // Collinear points give the stated distances exactly.
  FusedEmbedding a = vec({0}), p1 = vec({0.2}), n1 = vec({1.0});
  EXPECT_EQ(triplet_loss(a, p1, n1, 0.5), 0.0);
  FusedEmbedding p2 = vec({0.9}), n2 = vec({-0.3});
  EXPECT_NEAR(triplet_loss(a, p2, n2, 0.5), 1.1, 1e-12);
  EXPECT_EQ(triplet_loss(a, a, vec({0.7}), 0.5), 0.0);
  EXPECT_THROW(triplet_loss(a, p1, n1, -0.1), InvalidArgument);
}

TEST(SbclBatchLossTest, PerfectlySeparatedIsZero) {
  std::vector<FusedEmbedding> batch = {vec({0, 0}), vec({0, 0}), vec({0, 0}),
                                       vec({10, 10}), vec({-10, 10})};
  std::vector<Label> labels = {Label::kSecurity, Label::kSecurity, Label::kSecurity,
                               Label::kNonSecurity, Label::kNonSecurity};
  Rng rng(0);
  SbclResult r = sbcl_batch_loss(batch, labels, 0.5, rng);
  EXPECT_EQ(r.loss, 0.0);
  for (const auto& g : r.gradients) EXPECT_TRUE(g.isZero(0.0));
}

TEST(SbclBatchLossTest, MeanOverTriplets) {
  // Triplet 0: d_ap 0.9, d_an 1.0 -> 0.4. Triplet 1: d_ap 0.2, d_an 5 -> 0.
  std::vector<FusedEmbedding> batch = {vec({0}), vec({0.9}), vec({-1.0}),
                                       vec({10}), vec({10.2}), vec({5.2})};
  std::vector<Triplet> ts = {{0, 1, 2}, {3, 4, 5}};
  SbclResult r = sbcl_loss_for_triplets(batch, ts, 0.5);
  EXPECT_NEAR(r.loss, 0.2, 1e-12);
}

TEST(SbclBatchLossTest, IdentitiesOnRandomBatches) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    RandomBatch b = random_batch(rng, 12, 5, false);
    Rng mining(0);
    auto ts = mine_triplets(b.embeddings, b.labels, mining);
    SbclResult r = sbcl_loss_for_triplets(b.embeddings, ts, 0.5);
    double expected = 0;
    bool all_satisfied = true;
    for (auto t : ts) {
      double ap = loop_distance(b.embeddings[t.anchor].values(), b.embeddings[t.positive].values());
      double an = loop_distance(b.embeddings[t.anchor].values(), b.embeddings[t.negative].values());
      expected += std::max(0.0, ap - an + 0.5);
      all_satisfied = all_satisfied && an >= ap + 0.5;
    }
    expected /= static_cast<double>(ts.size());
    EXPECT_NEAR(r.loss, expected, 1e-12);
    EXPECT_GE(r.loss, 0.0);
    EXPECT_EQ(r.loss == 0.0, all_satisfied);
    double prev = -1;
    for (double margin : {0.0, 0.25, 0.5, 1.0, 2.0}) {
      double l = sbcl_loss_for_triplets(b.embeddings, ts, margin).loss;
      EXPECT_GE(l, prev);
      prev = l;
    }
  }
}

TEST(SbclBatchLossTest, GradientsMatchFiniteDifferences) {
  Rng rng(6);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<FusedEmbedding> batch;
    std::vector<Label> labels = {Label::kSecurity, Label::kNonSecurity, Label::kSecurity,
                                 Label::kNonSecurity, Label::kSecurity, Label::kNonSecurity};
    for (int i = 0; i < 6; ++i) batch.emplace_back(testing::random_matrix(9, 1, rng));
    Rng mining(0);
    auto ts = mine_triplets(batch, labels, mining);
    bool near_kink = false;
    for (auto t : ts) {
      double h = euclidean_distance(batch[t.anchor], batch[t.positive]) -
                 euclidean_distance(batch[t.anchor], batch[t.negative]) + 1.0;
      near_kink = near_kink || std::abs(h) < 1e-6;
    }
    if (near_kink) continue;
    SbclResult r = sbcl_batch_loss(batch, labels, 1.0, mining);
    const double h = 1e-6;
    for (int i = 0; i < 6; ++i) {
      for (int k = 0; k < 9; ++k) {
        auto shifted = [&](double delta) {
          std::vector<FusedEmbedding> b2 = batch;
          VectorXd v = b2[i].values();
          v[k] += delta;
          b2[i] = FusedEmbedding(v);
          Rng m(0);
          return sbcl_batch_loss(b2, labels, 1.0, m).loss;
        };
        double numeric = (shifted(h) - shifted(-h)) / (2 * h);
        double analytic = r.gradients[i][k];
        EXPECT_LE(std::abs(analytic - numeric),
                  1e-4 * std::max(std::abs(analytic), std::abs(numeric)) + 1e-7)
            << "trial " << trial << " sample " << i << " coord " << k;
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(BalancedBatchSamplerTest, HalfAndHalfWithOversampling) {
  std::vector<std::size_t> sec = {0, 1, 2}, non = {3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  BalancedBatchSampler sampler(sec, non, 5);
  Rng rng(1);
  auto batches = sampler.epoch(rng);
  EXPECT_EQ(batches.size(), sampler.batches_per_epoch());
  EXPECT_EQ(batches.size(), 5u);  // ceil(10 / 2)
  std::set<std::size_t> seen_non;
  for (const auto& b : batches) {
    ASSERT_EQ(b.size(), 5u);
    int s = 0;
    for (auto i : b) {
      if (i < 3) {
        ++s;
      } else {
        seen_non.insert(i);
      }
    }
    EXPECT_EQ(s, 3);
  }
  EXPECT_EQ(seen_non.size(), non.size());
}

TEST(BalancedBatchSamplerTest, DeterministicPerSeed) {
  BalancedBatchSampler sampler({0, 1, 2, 3}, {4, 5, 6, 7, 8}, 4);
  Rng a(7), b(7), c(8);
  auto ea = sampler.epoch(a);
  EXPECT_EQ(ea, sampler.epoch(b));
  EXPECT_NE(ea, sampler.epoch(c));
}

TEST(BalancedBatchSamplerTest, RejectsEmptyInput) {
  EXPECT_THROW(BalancedBatchSampler({}, {}, 4), InvalidArgument);
  EXPECT_THROW(BalancedBatchSampler({1}, {2}, 0), InvalidArgument);
}

}  // namespace
}  // namespace llmda
