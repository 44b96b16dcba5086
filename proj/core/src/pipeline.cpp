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

#include "llmda/pipeline.hpp"

#include "llmda/error.hpp"
#include "llmda/explain.hpp"

namespace llmda {

namespace {

struct FlagName {
  const char* name;
  bool AblationFlags::*member;
};

constexpr FlagName kFlagNames[] = {
    {"no_explanation", &AblationFlags::no_explanation},
    {"no_instruction", &AblationFlags::no_instruction},
    {"no_ptformer", &AblationFlags::no_ptformer},
    {"no_sbcl", &AblationFlags::no_sbcl},
};

EmbeddingMatrix zero_row(int dim, Modality modality) {
  return EmbeddingMatrix(Eigen::MatrixXd::Zero(1, dim), modality);
}

}  // namespace

std::string AblationFlags::name() const {
  std::string out;
  for (const auto& f : kFlagNames) {
    if (!(this->*f.member)) continue;
    if (!out.empty()) out += '+';
    out += f.name;
  }
  return out.empty() ? "full" : out;
}

AblationFlags parse_ablation(std::string_view text) {
  AblationFlags flags;
  if (text.empty() || text == "full") return flags;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('+', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view part = text.substr(start, end - start);
    bool matched = false;
    for (const auto& f : kFlagNames) {
      if (part == f.name) {
        flags.*f.member = true;
        matched = true;
      }
    }
    if (!matched) {
      throw InvalidArgument("unknown ablation flag '" + std::string(part) + "'");
    }
    start = end + 1;
  }
  return flags;
}

nlohmann::json to_json(const AblationFlags& flags) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& f : kFlagNames) j[f.name] = flags.*f.member;
  return j;
}

AblationFlags ablation_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("ablation flags must be an object");
  AblationFlags flags;
  for (const auto& [key, value] : j.items()) {
    bool matched = false;
    for (const auto& f : kFlagNames) {
      if (key == f.name) {
        if (!value.is_boolean()) {
          throw InvalidArgument("ablation flag '" + key + "' must be boolean");
        }
        flags.*f.member = value.get<bool>();
        matched = true;
      }
    }
    if (!matched) throw InvalidArgument("unknown ablation flag '" + key + "'");
  }
  return flags;
}

Backends make_default_backends(int dim, std::uint64_t seed) {
  EmbedderBackend backend;
  backend.kind = EmbedderKind::kHashedProjection;
  backend.dim = dim;
  backend.seed = seed;
  return {std::make_shared<HashedVocabTokenizer>(),
          std::make_shared<Embedder>(backend)};
}

EncodedSample encode_sample(const PatchSample& sample, const Backends& backends,
                            std::size_t max_tokens, const AblationFlags& flags) {
  if (!backends.tokenizer || !backends.embedder) {
    throw InvalidArgument("backends are not configured");
  }
  const Tokenizer& tok = *backends.tokenizer;
  const Embedder& emb = *backends.embedder;
  const int dim = emb.dim();

  auto text = [&](const std::optional<std::string>& s, Modality m, bool off) {
    if (off || !s || s->empty()) return zero_row(dim, m);
    return emb.embed_text(tokenize(*s, tok, max_tokens), m, sample.id());
  };

  return EncodedSample{
      sample.id(),
      sample.label(),
      emb.embed_patch(tokenize(sample.diff_text(), tok, max_tokens),
                      sample.id()),
      text(sample.explanation(), Modality::kExplanation, flags.no_explanation),
      text(sample.description(), Modality::kDescription, false),
      text(instruction_text(), Modality::kInstruction, flags.no_instruction),
  };
}

std::vector<EncodedSample> encode_samples(
    const std::vector<PatchSample>& samples, const Backends& backends,
    std::size_t max_tokens, const AblationFlags& flags) {
  std::vector<EncodedSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    out.push_back(encode_sample(s, backends, max_tokens, flags));
  }
  return out;
}

}  // namespace llmda
