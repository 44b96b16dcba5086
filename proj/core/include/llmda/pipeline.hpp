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

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmda/embedder.hpp"
#include "llmda/pt_former.hpp"
#include "llmda/tokenizer.hpp"
#include "llmda/types.hpp"

namespace llmda {

// Component switches for ablation runs. All false is the full model.
struct AblationFlags {
  bool no_explanation = false;  // explanation modality replaced by a zero row
  bool no_instruction = false;  // instruction modality replaced by a zero row
  bool no_ptformer = false;     // fusion replaced by plain pooled concatenation
  bool no_sbcl = false;         // objective reduced to the BCE term

  // "full" or the set flags joined by '+', e.g. "no_sbcl+no_instruction".
  std::string name() const;
  bool operator==(const AblationFlags&) const = default;
};

// Parses the name() format; throws InvalidArgument for unknown flags.
AblationFlags parse_ablation(std::string_view text);
nlohmann::json to_json(const AblationFlags& flags);
AblationFlags ablation_from_json(const nlohmann::json& j);

// The frozen text-to-embedding stack shared by training and inference.
struct Backends {
  std::shared_ptr<const Tokenizer> tokenizer;
  std::shared_ptr<const Embedder> embedder;
};

// Hashed tokenizer plus hashed-projection embedder of the given width.
Backends make_default_backends(int dim, std::uint64_t seed);

// Token-level embeddings of the four modalities of one sample.
struct EncodedSample {
  std::string id;
  Label label;
  EmbeddingMatrix patch;
  EmbeddingMatrix explanation;
  EmbeddingMatrix description;
  EmbeddingMatrix instruction;

  FuseInputs inputs() const {
    return {patch, explanation, description, instruction};
  }
};

// Every modality is truncated to max_tokens. A missing explanation or
// description becomes a single zero row, as do modalities switched off by
// the flags.
EncodedSample encode_sample(const PatchSample& sample, const Backends& backends,
                            std::size_t max_tokens,
                            const AblationFlags& flags = {});
std::vector<EncodedSample> encode_samples(
    const std::vector<PatchSample>& samples, const Backends& backends,
    std::size_t max_tokens, const AblationFlags& flags = {});

}  // namespace llmda
