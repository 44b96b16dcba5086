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
#include <filesystem>
#include <string>
#include <vector>

#include "llmda/types.hpp"

namespace llmda {

struct PcaResult {
  Eigen::MatrixXd projection;   // n x k, centered data times components
  Eigen::MatrixXd components;   // d x k, orthonormal columns
  Eigen::VectorXd explained_variance_ratio;  // k, non-increasing
  Eigen::VectorXd mean;         // d
  int rank = 0;                 // numerical rank of the centered data
  // Set when rank < requested components; only `rank` components are
  // returned then.
  bool degenerate = false;
};

// Principal directions are eigenvectors of the sample covariance in
// decreasing eigenvalue order. Each component is signed so that its entry
// of largest magnitude is positive (lowest index on ties). Throws
// InvalidArgument unless rows >= components >= 1.
PcaResult pca_project(const Eigen::MatrixXd& data, int components = 2);
PcaResult pca_project(const std::vector<FusedEmbedding>& embeddings,
                      int components = 2);

// CSV with header sample_id,pc1,...,pck,label. `labels` are written as the
// label names.
void write_pca_csv(const std::filesystem::path& path, const PcaResult& pca,
                   const std::vector<std::string>& sample_ids,
                   const std::vector<Label>& labels);

}  // namespace llmda
