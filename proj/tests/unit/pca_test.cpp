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

#include "llmda/error.hpp"
#include "llmda/pca.hpp"
#include "test_support.hpp"

namespace llmda {
namespace {

using Eigen::MatrixXd;

// Residual of projecting the centered data onto the top-k right singular
// vectors, via SVD rather than the covariance eigensolver.
double svd_reconstruction_error(const MatrixXd& data, int k) {
  MatrixXd centered = data.rowwise() - data.colwise().mean();
  Eigen::JacobiSVD<MatrixXd> svd(centered, Eigen::ComputeThinV);
  MatrixXd v = svd.matrixV().leftCols(k);
  return (centered - centered * v * v.transpose()).norm();
}

TEST(PcaProjectTest, ComponentsOrthonormal) {
  Rng rng(1);
  MatrixXd data = testing::random_matrix(50, 8, rng);
  PcaResult r = pca_project(data, 4);
  MatrixXd gram = r.components.transpose() * r.components;
  EXPECT_LT((gram - MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-10);
  for (int i = 1; i < 4; ++i) {
    EXPECT_LE(r.explained_variance_ratio(i), r.explained_variance_ratio(i - 1));
  }
  EXPECT_FALSE(r.degenerate);
  EXPECT_EQ(r.rank, 8);
}

TEST(PcaProjectTest, ReconstructionMatchesSvdOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    MatrixXd data = testing::random_matrix(50, 8, rng);
    PcaResult r = pca_project(data, 2);
    MatrixXd centered = data.rowwise() - data.colwise().mean();
    double ours = (centered - r.projection * r.components.transpose()).norm();
    EXPECT_NEAR(ours, svd_reconstruction_error(data, 2), 1e-8);
  }
}

TEST(PcaProjectTest, VarianceRatiosMatchSingularValues) {
  Rng rng(3);
  MatrixXd data = testing::random_matrix(30, 5, rng);
  PcaResult r = pca_project(data, 3);
  MatrixXd centered = data.rowwise() - data.colwise().mean();
  Eigen::JacobiSVD<MatrixXd> svd(centered);
  Eigen::VectorXd s2 = svd.singularValues().array().square();
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(r.explained_variance_ratio(i), s2(i) / s2.sum(), 1e-12);
  }
}

TEST(PcaProjectTest, LineInThreeDimensions) {
  MatrixXd data(6, 3);
  for (int i = 0; i < 6; ++i) {
    double t = i * 0.7 - 1.3;
    data.row(i) << 1 + 2 * t, -3 + t, 0.5 - 4 * t;
  }
  PcaResult r = pca_project(data, 1);
  EXPECT_GE(r.explained_variance_ratio(0), 1.0 - 1e-10);
  EXPECT_EQ(r.rank, 1);
  PcaResult two = pca_project(data, 2);
  EXPECT_TRUE(two.degenerate);
  EXPECT_EQ(two.components.cols(), 1);
  EXPECT_EQ(two.projection.cols(), 1);
}

TEST(PcaProjectTest, ProjectionIsCentered) {
  Rng rng(4);
  MatrixXd data = testing::random_matrix(40, 6, rng).array() + 25.0;
  PcaResult r = pca_project(data, 3);
  EXPECT_LT(r.projection.colwise().mean().cwiseAbs().maxCoeff(), 1e-10);
}

TEST(PcaProjectTest, SignConventionLargestEntryPositive) {
  Rng rng(5);
  MatrixXd data = testing::random_matrix(20, 5, rng);
  PcaResult a = pca_project(data, 3);
  PcaResult b = pca_project(-data, 3);
  for (int c = 0; c < 3; ++c) {
    Eigen::Index arg;
    a.components.col(c).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(a.components(arg, c), 0.0);
  }
  // Negating the data leaves the directions, and hence the signed
  // components, unchanged.
  EXPECT_LT((a.components - b.components).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(PcaProjectTest, ConstantDataIsDegenerate) {
  MatrixXd data = MatrixXd::Constant(5, 3, 2.0);
  PcaResult r = pca_project(data, 2);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.rank, 0);
  EXPECT_EQ(r.projection.cols(), 0);
}

TEST(PcaProjectTest, PreconditionViolations) {
  Rng rng(6);
  EXPECT_THROW(pca_project(testing::random_matrix(2, 4, rng), 3), InvalidArgument);
  EXPECT_THROW(pca_project(testing::random_matrix(5, 4, rng), 0), InvalidArgument);
  std::vector<FusedEmbedding> ragged = {FusedEmbedding(Eigen::VectorXd::Zero(3)),
                                        FusedEmbedding(Eigen::VectorXd::Zero(4))};
  EXPECT_THROW(pca_project(ragged, 1), LengthMismatch);
}

TEST(PcaCsvTest, HeaderRowsAndQuoting) {
  testing::TempDir dir;
  MatrixXd data(3, 2);
  data << 0, 0, 1, 1, 2, 0;
  PcaResult r = pca_project(data, 2);
  write_pca_csv(dir / "pca.csv", r, {"a", "b,c", "d\"e"},
                {Label::kSecurity, Label::kNonSecurity, Label::kSecurity});
  std::string text = testing::read_file(dir / "pca.csv");
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "sample_id,pc1,pc2,label");
  std::getline(lines, line);
  EXPECT_EQ(line.rfind("a,", 0), 0u);
  EXPECT_NE(line.find(",security"), std::string::npos);
  std::getline(lines, line);
  EXPECT_EQ(line.rfind("\"b,c\",", 0), 0u);
  std::getline(lines, line);
  EXPECT_EQ(line.rfind("\"d\"\"e\",", 0), 0u);
  EXPECT_THROW(write_pca_csv(dir / "x.csv", r, {"a"}, {Label::kSecurity}),
               LengthMismatch);
}

}  // namespace
}  // namespace llmda
