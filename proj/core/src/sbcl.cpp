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

#include "llmda/sbcl.hpp"

#include <algorithm>
#include <cmath>

#include "llmda/error.hpp"

namespace llmda {

double euclidean_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) {
    throw LengthMismatch(static_cast<std::size_t>(a.size()),
                         static_cast<std::size_t>(b.size()));
  }
  return (a - b).norm();
}

double euclidean_distance(const FusedEmbedding& a, const FusedEmbedding& b) {
  return euclidean_distance(a.values(), b.values());
}

std::vector<Triplet> mine_triplets(std::span<const FusedEmbedding> batch,
                                   std::span<const Label> labels, Rng& rng,
                                   AnchorMode mode) {
  if (batch.size() != labels.size()) {
    throw LengthMismatch(batch.size(), labels.size());
  }
  std::vector<std::size_t> sec, non;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == Label::kSecurity ? sec : non).push_back(i);
  }
  if (sec.size() < 2) {
    throw InsufficientClassMembers(
        "security", "triplet mining needs at least 2 security samples, got " +
                        std::to_string(sec.size()));
  }
  if (non.empty()) {
    throw InsufficientClassMembers(
        "non-security", "triplet mining needs at least 1 non-security sample");
  }

  std::vector<std::size_t> anchors = sec;
  if (mode == AnchorMode::kRandomOne) {
    std::uniform_int_distribution<std::size_t> pick(0, sec.size() - 1);
    anchors = {sec[pick(rng)]};
  }

  std::vector<Triplet> out;
  out.reserve(anchors.size());
  for (std::size_t a : anchors) {
    const auto& ea = batch[a].values();
    std::size_t best_p = 0;
    double best_pd = -1.0;
    for (std::size_t p : sec) {
      if (p == a) continue;
      double d = euclidean_distance(ea, batch[p].values());
      if (d > best_pd) {  // strict: keeps the lowest index on ties
        best_pd = d;
        best_p = p;
      }
    }
    std::size_t best_n = 0;
    double best_nd = INFINITY;
    for (std::size_t n : non) {
      double d = euclidean_distance(ea, batch[n].values());
      if (d < best_nd) {
        best_nd = d;
        best_n = n;
      }
    }
    out.push_back({a, best_p, best_n});
  }
  return out;
}

double triplet_loss(const FusedEmbedding& a, const FusedEmbedding& p,
                    const FusedEmbedding& n, double margin) {
  if (margin < 0) throw InvalidArgument("margin must be >= 0");
  return std::max(0.0, euclidean_distance(a, p) - euclidean_distance(a, n) +
                           margin);
}

SbclResult sbcl_loss_for_triplets(std::span<const FusedEmbedding> batch,
                                  std::span<const Triplet> triplets,
                                  double margin) {
  if (margin < 0) throw InvalidArgument("margin must be >= 0");
  SbclResult r;
  r.triplets.assign(triplets.begin(), triplets.end());
  r.gradients.reserve(batch.size());
  for (const auto& e : batch) r.gradients.push_back(Eigen::VectorXd::Zero(e.size()));
  if (triplets.empty()) return r;

  const double w = 1.0 / static_cast<double>(triplets.size());
  for (const auto& t : triplets) {
    const auto& a = batch[t.anchor].values();
    const auto& p = batch[t.positive].values();
    const auto& n = batch[t.negative].values();
    Eigen::VectorXd ap = a - p;
    Eigen::VectorXd an = a - n;
    double d_ap = ap.norm();
    double d_an = an.norm();
    double hinge = d_ap - d_an + margin;
    if (hinge <= 0.0) continue;
    r.loss += w * hinge;
    if (d_ap > 0.0) {
      Eigen::VectorXd g = (w / d_ap) * ap;
      r.gradients[t.anchor] += g;
      r.gradients[t.positive] -= g;
    }
    if (d_an > 0.0) {
      Eigen::VectorXd g = (w / d_an) * an;
      r.gradients[t.anchor] -= g;
      r.gradients[t.negative] += g;
    }
  }
  return r;
}

SbclResult sbcl_batch_loss(std::span<const FusedEmbedding> batch,
                           std::span<const Label> labels, double margin,
                           Rng& rng, AnchorMode mode) {
  auto triplets = mine_triplets(batch, labels, rng, mode);
  return sbcl_loss_for_triplets(batch, triplets, margin);
}

BalancedBatchSampler::BalancedBatchSampler(
    std::vector<std::size_t> security, std::vector<std::size_t> non_security,
    std::size_t batch_size)
    : security_(std::move(security)),
      non_security_(std::move(non_security)),
      batch_size_(batch_size) {
  if (batch_size_ < 1) throw InvalidArgument("batch size must be >= 1");
  if (security_.empty() && non_security_.empty()) {
    throw InvalidArgument("batch sampler needs at least one sample");
  }
}

std::size_t BalancedBatchSampler::batches_per_epoch() const {
  const std::size_t want_sec = (batch_size_ + 1) / 2;
  const std::size_t want_non = batch_size_ / 2;
  auto ceil_div = [](std::size_t a, std::size_t b) { return (a + b - 1) / b; };
  std::size_t n = 1;
  if (!security_.empty() && want_sec > 0) {
    n = std::max(n, ceil_div(security_.size(), want_sec));
  }
  if (!non_security_.empty() && want_non > 0) {
    n = std::max(n, ceil_div(non_security_.size(), want_non));
  }
  return n;
}

std::size_t BalancedBatchSampler::draw(std::vector<std::size_t>& pool,
                                       std::size_t& cursor, Rng& rng) {
  if (cursor == pool.size()) {
    std::shuffle(pool.begin(), pool.end(), rng);
    cursor = 0;
  }
  return pool[cursor++];
}

std::vector<std::vector<std::size_t>> BalancedBatchSampler::epoch(Rng& rng) {
  std::size_t want_sec = (batch_size_ + 1) / 2;
  std::size_t want_non = batch_size_ / 2;
  // A missing class hands its share to the other.
  if (security_.empty()) {
    want_non = batch_size_;
    want_sec = 0;
  } else if (non_security_.empty()) {
    want_sec = batch_size_;
    want_non = 0;
  }
  std::vector<std::size_t> sec = security_;
  std::vector<std::size_t> non = non_security_;
  std::shuffle(sec.begin(), sec.end(), rng);
  std::shuffle(non.begin(), non.end(), rng);
  std::size_t sec_cursor = 0, non_cursor = 0;

  std::vector<std::vector<std::size_t>> batches(batches_per_epoch());
  for (auto& b : batches) {
    b.reserve(batch_size_);
    for (std::size_t i = 0; i < want_sec; ++i) b.push_back(draw(sec, sec_cursor, rng));
    for (std::size_t i = 0; i < want_non; ++i) b.push_back(draw(non, non_cursor, rng));
  }
  return batches;
}

}  // namespace llmda
