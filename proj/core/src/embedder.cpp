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

#include "llmda/embedder.hpp"

#include <fstream>
#include <random>

#include "llmda/binary_io.hpp"
#include "llmda/error.hpp"
#include "llmda/random.hpp"

namespace llmda {

void EmbedderBackend::validate() const {
  if (dim < 1) throw InvalidArgument("embedder dim must be >= 1");
  if (kind == EmbedderKind::kPrecomputedFile &&
      (!source_path || source_path->empty())) {
    throw InvalidArgument("precomputed_file embedder requires source_path");
  }
}

nlohmann::json to_json(const EmbedderBackend& b) {
  nlohmann::json j{
      {"kind", b.kind == EmbedderKind::kHashedProjection ? "hashed_projection"
                                                         : "precomputed_file"},
      {"dim", b.dim},
      {"seed", b.seed},
  };
  if (b.source_path) j["source_path"] = b.source_path->string();
  return j;
}

EmbedderBackend embedder_backend_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("embedder config must be an object");
  EmbedderBackend b;
  try {
    auto kind = j.value("kind", std::string("hashed_projection"));
    if (kind == "hashed_projection") {
      b.kind = EmbedderKind::kHashedProjection;
    } else if (kind == "precomputed_file") {
      b.kind = EmbedderKind::kPrecomputedFile;
    } else {
      throw InvalidArgument("unknown embedder kind '" + kind + "'");
    }
    b.dim = j.value("dim", b.dim);
    b.seed = j.value("seed", b.seed);
    if (j.contains("source_path") && !j["source_path"].is_null()) {
      b.source_path = j["source_path"].get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("embedder config: ") + e.what());
  }
  b.validate();
  return b;
}

void write_precomputed_embeddings(
    const std::filesystem::path& path, int dim,
    const std::vector<PrecomputedEntry>& entries) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  BinaryWriter w(out);
  w.magic(kEmbeddingFileMagic);
  w.pod<std::uint32_t>(kEmbeddingFileVersion);
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(dim));
  w.pod<std::uint64_t>(entries.size());
  for (const auto& e : entries) {
    if (e.values.cols() != dim) {
      throw InvalidArgument("precomputed entry '" + e.sample_id +
                            "' has wrong dim");
    }
    w.string(e.sample_id);
    w.pod<std::uint8_t>(static_cast<std::uint8_t>(e.modality));
    w.matrix(e.values);
  }
  if (!w.ok()) throw IoError("write failed: " + path.string());
}

Eigen::RowVectorXd hashed_token_row(std::int32_t token, int dim,
                                    std::uint64_t seed) {
  Rng rng = substream(seed, "token", static_cast<std::uint64_t>(
                                         static_cast<std::uint32_t>(token)));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::RowVectorXd row(dim);
  for (int k = 0; k < dim; ++k) row[k] = normal(rng);
  double norm = row.norm();
  if (norm > 0) row /= norm;
  return row;
}

Embedder::Embedder(EmbedderBackend backend) : backend_(std::move(backend)) {
  backend_.validate();
  if (backend_.kind != EmbedderKind::kPrecomputedFile) return;
  std::ifstream in(*backend_.source_path, std::ios::binary);
  if (!in) throw IoError("cannot open " + backend_.source_path->string());
  BinaryReader r(in);
  r.expect_magic(kEmbeddingFileMagic);
  auto version = r.pod<std::uint32_t>();
  if (version != kEmbeddingFileVersion) {
    throw FormatError("unsupported embedding file version " +
                      std::to_string(version));
  }
  auto dim = r.pod<std::uint32_t>();
  if (static_cast<int>(dim) != backend_.dim) {
    throw InvalidArgument("embedding file dim " + std::to_string(dim) +
                          " does not match configured dim " +
                          std::to_string(backend_.dim));
  }
  auto count = r.pod<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string id = r.string();
    auto modality = r.pod<std::uint8_t>();
    if (modality > static_cast<std::uint8_t>(Modality::kInstruction)) {
      throw FormatError("bad modality tag in embedding file");
    }
    Eigen::MatrixXd m = r.matrix();
    if (m.cols() != backend_.dim) throw FormatError("entry dim mismatch");
    table_[{std::move(id), static_cast<Modality>(modality)}] = std::move(m);
  }
}

EmbeddingMatrix Embedder::embed(const TokenSequence& tokens, Modality modality,
                                std::string_view sample_id) const {
  const int dim = backend_.dim;
  if (tokens.empty()) {
    return EmbeddingMatrix(Eigen::MatrixXd::Zero(1, dim), modality);
  }
  if (backend_.kind == EmbedderKind::kHashedProjection) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(tokens.length()), dim);
    for (std::size_t i = 0; i < tokens.length(); ++i) {
      m.row(static_cast<Eigen::Index>(i)) =
          hashed_token_row(tokens.tokens()[i], dim, backend_.seed);
    }
    return EmbeddingMatrix(std::move(m), modality);
  }
  auto it = table_.find({std::string(sample_id), modality});
  if (it == table_.end()) it = table_.find({"*", modality});
  if (it == table_.end()) {
    throw BackendMissingEntry(std::string(sample_id),
                              std::string(modality_name(modality)));
  }
  if (it->second.rows() == 0) {
    return EmbeddingMatrix(Eigen::MatrixXd::Zero(1, dim), modality);
  }
  return EmbeddingMatrix(it->second, modality);
}

EmbeddingMatrix Embedder::embed_patch(const TokenSequence& tokens,
                                      std::string_view sample_id) const {
  return embed(tokens, Modality::kPatch, sample_id);
}

EmbeddingMatrix Embedder::embed_text(const TokenSequence& tokens,
                                     Modality modality,
                                     std::string_view sample_id) const {
  if (modality == Modality::kPatch) {
    throw InvalidArgument("embed_text requires a text modality");
  }
  return embed(tokens, modality, sample_id);
}

}  // namespace llmda
