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

#include "llmda/pca.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "llmda/error.hpp"

namespace llmda {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

PcaResult pca_project(const MatrixXd& data, int components) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (components < 1 || n < components || d < 1) {
    throw InvalidArgument("pca needs rows >= components >= 1, got " +
                          std::to_string(n) + " rows and " +
                          std::to_string(components) + " components");
  }
  if (!all_finite(data)) throw InvalidArgument("pca input has non-finite values");

  PcaResult r;
  r.mean = data.colwise().mean().transpose();
  MatrixXd centered = data.rowwise() - r.mean.transpose();
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  MatrixXd cov = centered.transpose() * centered / denom;

  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw DegenerateData("eigendecomposition did not converge");
  }
  // Eigen returns ascending eigenvalues.
  VectorXd values = solver.eigenvalues().reverse();
  MatrixXd vectors = solver.eigenvectors().rowwise().reverse();
  for (Eigen::Index i = 0; i < values.size(); ++i) values(i) = std::max(0.0, values(i));

  const double total = values.sum();
  const double tol = std::max(values(0), 1e-300) * 1e-10;
  r.rank = 0;
  if (total > 0) {
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      if (values(i) > tol) ++r.rank;
    }
  }
  int k = components;
  if (r.rank < components) {
    r.degenerate = true;
    k = r.rank;
  }

  r.components = vectors.leftCols(k);
  for (int c = 0; c < k; ++c) {
    Eigen::Index arg = 0;
    r.components.col(c).cwiseAbs().maxCoeff(&arg);
    if (r.components(arg, c) < 0) r.components.col(c) *= -1.0;
  }
  r.explained_variance_ratio =
      total > 0 ? VectorXd(values.head(k) / total) : VectorXd::Zero(k);
  r.projection = centered * r.components;
  return r;
}

PcaResult pca_project(const std::vector<FusedEmbedding>& embeddings,
                      int components) {
  if (embeddings.empty()) throw InvalidArgument("pca needs at least one embedding");
  const Eigen::Index d = embeddings.front().size();
  MatrixXd data(static_cast<Eigen::Index>(embeddings.size()), d);
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    if (embeddings[i].size() != d) {
      throw LengthMismatch(static_cast<std::size_t>(embeddings[i].size()),
                           static_cast<std::size_t>(d));
    }
    data.row(static_cast<Eigen::Index>(i)) = embeddings[i].values().transpose();
  }
  return pca_project(data, components);
}

void write_pca_csv(const std::filesystem::path& path, const PcaResult& pca,
                   const std::vector<std::string>& sample_ids,
                   const std::vector<Label>& labels) {
  const auto n = static_cast<std::size_t>(pca.projection.rows());
  if (sample_ids.size() != n) throw LengthMismatch(sample_ids.size(), n);
  if (labels.size() != n) throw LengthMismatch(labels.size(), n);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "sample_id";
  for (Eigen::Index c = 0; c < pca.projection.cols(); ++c) out << ",pc" << c + 1;
  out << ",label\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < n; ++i) {
    out << csv_field(sample_ids[i]);
    for (Eigen::Index c = 0; c < pca.projection.cols(); ++c) {
      out << ',' << pca.projection(static_cast<Eigen::Index>(i), c);
    }
    out << ',' << label_name(labels[i]) << '\n';
  }
  if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace llmda
