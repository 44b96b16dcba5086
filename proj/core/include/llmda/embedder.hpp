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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmda/types.hpp"

namespace llmda {

enum class EmbedderKind { kPrecomputedFile, kHashedProjection };

struct EmbedderBackend {
  EmbedderKind kind = EmbedderKind::kHashedProjection;
  int dim = 256;
  std::uint64_t seed = 0;                         // hashed_projection
  std::optional<std::filesystem::path> source_path;  // precomputed_file

  void validate() const;
};

nlohmann::json to_json(const EmbedderBackend& backend);
EmbedderBackend embedder_backend_from_json(const nlohmann::json& j);

// Precomputed embedding file (version 1):
//
//   magic "LLMDAEMB" | u32 version | u32 dim | u64 entry count
//   per entry: u32 id length, id bytes, u8 modality, u32 rows, u32 cols,
//              rows*cols f64 (column-major)
//
// Integers and doubles are little-endian. Entries keyed by (sample id,
// modality); the sample id "*" holds entries shared by every sample (e.g. the
// instruction).
struct PrecomputedEntry {
  std::string sample_id;
  Modality modality;
  Eigen::MatrixXd values;
};

inline constexpr std::string_view kEmbeddingFileMagic = "LLMDAEMB";
inline constexpr std::uint32_t kEmbeddingFileVersion = 1;

void write_precomputed_embeddings(const std::filesystem::path& path, int dim,
                                  const std::vector<PrecomputedEntry>& entries);

// The L2-normalized pseudo-random row assigned to a token id.
Eigen::RowVectorXd hashed_token_row(std::int32_t token, int dim,
                                    std::uint64_t seed);

// Frozen token-level encoder for the four modalities. Pure function of
// (tokens, backend config); safe to share across threads.
class Embedder {
 public:
  explicit Embedder(EmbedderBackend backend);

  // An empty token sequence yields a single all-zero row so downstream shapes
  // stay valid. For the precomputed backend the sample id selects the entry
  // and the tokens are ignored; throws BackendMissingEntry when absent.
  EmbeddingMatrix embed_patch(const TokenSequence& tokens,
                              std::string_view sample_id = {}) const;
  EmbeddingMatrix embed_text(const TokenSequence& tokens, Modality modality,
                             std::string_view sample_id = {}) const;

  int dim() const { return backend_.dim; }
  const EmbedderBackend& backend() const { return backend_; }

 private:
  EmbeddingMatrix embed(const TokenSequence& tokens, Modality modality,
                        std::string_view sample_id) const;

  EmbedderBackend backend_;
  std::map<std::pair<std::string, Modality>, Eigen::MatrixXd> table_;
};

}  // namespace llmda
