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

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "llmda/random.hpp"
#include "llmda/types.hpp"

namespace llmda {

// Batch positions of one (anchor, positive, negative) triple. Anchor and
// positive are security samples, the negative is non-security.
struct Triplet {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;

  bool operator==(const Triplet&) const = default;
};

// kAll: every security sample anchors once, in batch order.
// kRandomOne: a single anchor drawn uniformly from the security samples.
enum class AnchorMode { kAll, kRandomOne };

double euclidean_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
// Throws LengthMismatch.
double euclidean_distance(const FusedEmbedding& a, const FusedEmbedding& b);

// Hardest positive (security, not the anchor itself, maximal distance) and
// hardest negative (non-security, minimal distance) per anchor; ties go to
// the lowest batch index. The rng is consumed only by kRandomOne.
//
// Throws InsufficientClassMembers when the batch has fewer than two security
// samples or no non-security sample.
std::vector<Triplet> mine_triplets(std::span<const FusedEmbedding> batch,
                                   std::span<const Label> labels, Rng& rng,
                                   AnchorMode mode = AnchorMode::kAll);

// max(0, d(a, p) - d(a, n) + margin).
double triplet_loss(const FusedEmbedding& a, const FusedEmbedding& p,
                    const FusedEmbedding& n, double margin);

struct SbclResult {
  double loss = 0.0;
  std::vector<Triplet> triplets;
  // d(loss)/d(embedding) per batch position. The hinge kink and zero
  // distances take subgradient 0.
  std::vector<Eigen::VectorXd> gradients;
};

// Mean triplet loss over the given triplets, with gradients.
SbclResult sbcl_loss_for_triplets(std::span<const FusedEmbedding> batch,
                                  std::span<const Triplet> triplets,
                                  double margin);

// Mines triplets then averages their losses.
SbclResult sbcl_batch_loss(std::span<const FusedEmbedding> batch,
                           std::span<const Label> labels, double margin,
                           Rng& rng, AnchorMode mode = AnchorMode::kAll);

// Class-balanced batches: ceil(B/2) security and floor(B/2) non-security
// indices per batch. Each class pool is reshuffled whenever it runs dry, so
// the minority class is drawn with replacement across batches. An epoch has
// enough batches to visit every majority-class sample once.
class BalancedBatchSampler {
 public:
  BalancedBatchSampler(std::vector<std::size_t> security,
                       std::vector<std::size_t> non_security,
                       std::size_t batch_size);

  std::vector<std::vector<std::size_t>> epoch(Rng& rng);
  std::size_t batches_per_epoch() const;

 private:
  std::size_t draw(std::vector<std::size_t>& pool, std::size_t& cursor,
                   Rng& rng);

  std::vector<std::size_t> security_;
  std::vector<std::size_t> non_security_;
  std::size_t batch_size_;
};

}  // namespace llmda
