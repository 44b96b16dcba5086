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

#include "llmda/embedder.hpp"
#include "llmda/error.hpp"
#include "test_support.hpp"

namespace llmda {
namespace {

EmbedderBackend hashed(int dim, std::uint64_t seed) {
  EmbedderBackend b;
  b.kind = EmbedderKind::kHashedProjection;
  b.dim = dim;
  b.seed = seed;
  return b;
}

TokenSequence seq(std::vector<std::int32_t> ids) {
  std::size_t n = ids.size();
  return TokenSequence(std::move(ids), n + 1);
}

TEST(HashedProjectionTest, Deterministic) {
  Embedder a(hashed(16, 7)), b(hashed(16, 7));
  TokenSequence t = seq({3, 99, 1024});
  EXPECT_EQ(a.embed_patch(t).values(), b.embed_patch(t).values());
  EXPECT_EQ(a.embed_patch(t).values(), a.embed_patch(t).values());
}

TEST(HashedProjectionTest, SeedChangesValues) {
  TokenSequence t = seq({3});
  EXPECT_NE(Embedder(hashed(16, 7)).embed_patch(t).values(),
            Embedder(hashed(16, 8)).embed_patch(t).values());
}

TEST(HashedProjectionTest, EmptySequenceGivesZeroSentinel) {
  Embedder e(hashed(12, 1));
  EmbeddingMatrix m = e.embed_patch(TokenSequence{});
  ASSERT_EQ(m.seq_len(), 1);
  ASSERT_EQ(m.dim(), 12);
  EXPECT_TRUE(m.values().isZero(0.0));
  EXPECT_EQ(m.modality(), Modality::kPatch);
}

TEST(HashedProjectionTest, RepeatedTokenRepeatsRow) {
  Embedder e(hashed(8, 7));
  EmbeddingMatrix m = e.embed_patch(seq({5, 5}));
  ASSERT_EQ(m.seq_len(), 2);
  EXPECT_EQ(m.values().row(0), m.values().row(1));
  EXPECT_EQ(Eigen::RowVectorXd(m.values().row(0)), hashed_token_row(5, 8, 7));
}

TEST(HashedProjectionTest, RowsAreUnitNormAndFinite) {
  Embedder e(hashed(32, 11));
  std::vector<std::int32_t> ids;
  for (int i = 0; i < 200; ++i) ids.push_back(i * 37 - 1000);
  EmbeddingMatrix m = e.embed_patch(seq(ids));
  EXPECT_TRUE(all_finite(m.values()));
  for (Eigen::Index r = 0; r < m.seq_len(); ++r) {
    EXPECT_NEAR(m.values().row(r).norm(), 1.0, 1e-12);
  }
}

TEST(HashedProjectionTest, TextModalitiesShareValues) {
  Embedder e(hashed(16, 3));
  TokenSequence t = seq({10, 20, 30});
  EmbeddingMatrix ex = e.embed_text(t, Modality::kExplanation);
  EmbeddingMatrix desc = e.embed_text(t, Modality::kDescription);
  EXPECT_EQ(ex.values(), desc.values());
  EXPECT_EQ(ex.modality(), Modality::kExplanation);
  EXPECT_EQ(desc.modality(), Modality::kDescription);
  EXPECT_EQ(e.embed_text(t, Modality::kInstruction).values(),
            e.embed_text(t, Modality::kInstruction).values());
}

TEST(HashedProjectionTest, EmbedTextRejectsPatchModality) {
  Embedder e(hashed(4, 0));
  EXPECT_THROW(e.embed_text(seq({1}), Modality::kPatch), InvalidArgument);
}

TEST(EmbedderBackendTest, Validation) {
  EmbedderBackend b = hashed(0, 0);
  EXPECT_THROW(b.validate(), InvalidArgument);
  b.dim = 4;
  b.kind = EmbedderKind::kPrecomputedFile;
  EXPECT_THROW(b.validate(), InvalidArgument);
}

TEST(EmbedderBackendTest, JsonRoundTrip) {
  EmbedderBackend b = hashed(24, 99);
  EXPECT_EQ(to_json(embedder_backend_from_json(to_json(b))), to_json(b));
  EXPECT_THROW(embedder_backend_from_json({{"kind", "bert"}}), InvalidArgument);
}

class PrecomputedTest : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng(5);
    patch_ = testing::random_matrix(3, 4, rng);
    inst_ = testing::random_matrix(2, 4, rng);
    write_precomputed_embeddings(dir_ / "emb.bin", 4,
                                 {{"s1", Modality::kPatch, patch_},
                                  {"*", Modality::kInstruction, inst_}});
    backend_.kind = EmbedderKind::kPrecomputedFile;
    backend_.dim = 4;
    backend_.source_path = dir_ / "emb.bin";
  }

  testing::TempDir dir_;
  Eigen::MatrixXd patch_, inst_;
  EmbedderBackend backend_;
};

TEST_F(PrecomputedTest, RoundTripsBitExact) {
  Embedder e(backend_);
  EXPECT_EQ(e.embed_patch(seq({1}), "s1").values(), patch_);
}

TEST_F(PrecomputedTest, SharedEntryServesEveryId) {
  Embedder e(backend_);
  EXPECT_EQ(e.embed_text(seq({1}), Modality::kInstruction, "anything").values(),
            inst_);
}

TEST_F(PrecomputedTest, AbsentIdThrows) {
  Embedder e(backend_);
  EXPECT_THROW(e.embed_patch(seq({1}), "s2"), BackendMissingEntry);
  EXPECT_THROW(e.embed_text(seq({1}), Modality::kExplanation, "s1"),
               BackendMissingEntry);
}

TEST_F(PrecomputedTest, DimMismatchRejected) {
  backend_.dim = 5;
  EXPECT_THROW(Embedder{backend_}, InvalidArgument);
}

TEST_F(PrecomputedTest, BadMagicRejected) {
  std::ofstream(dir_ / "bad.bin", std::ios::binary) << "NOTEMBED0000";
  backend_.source_path = dir_ / "bad.bin";
  EXPECT_THROW(Embedder{backend_}, FormatError);
}

}  // namespace
}  // namespace llmda
