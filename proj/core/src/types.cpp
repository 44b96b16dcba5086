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

#include "llmda/types.hpp"

#include "llmda/error.hpp"

namespace llmda {

std::string_view label_name(Label label) {
  return label == Label::kSecurity ? "security" : "non-security";
}

Label parse_label(std::string_view text) {
  if (text == "security") return Label::kSecurity;
  if (text == "non-security") return Label::kNonSecurity;
  throw InvalidArgument("unknown label '" + std::string(text) + "'");
}

std::string_view modality_name(Modality modality) {
  switch (modality) {
    case Modality::kPatch:
      return "patch";
    case Modality::kExplanation:
      return "explanation";
    case Modality::kDescription:
      return "description";
    case Modality::kInstruction:
      return "instruction";
  }
  return "unknown";
}

Modality parse_modality(std::string_view text) {
  for (Modality m : {Modality::kPatch, Modality::kExplanation,
                     Modality::kDescription, Modality::kInstruction}) {
    if (modality_name(m) == text) return m;
  }
  throw InvalidArgument("unknown modality '" + std::string(text) + "'");
}

PatchSample::PatchSample(std::string id, std::string diff_text, Label label,
                         std::optional<std::string> description,
                         std::optional<std::string> explanation,
                         std::string source)
    : id_(std::move(id)),
      diff_text_(std::move(diff_text)),
      label_(label),
      description_(std::move(description)),
      explanation_(std::move(explanation)),
      source_(std::move(source)) {
  if (diff_text_.empty()) {
    throw InvalidArgument("patch sample '" + id_ + "' has an empty diff");
  }
}

nlohmann::json to_json(const PatchSample& sample) {
  nlohmann::json j;
  j["id"] = sample.id();
  j["diff"] = sample.diff_text();
  j["message"] = sample.description() ? nlohmann::json(*sample.description())
                                      : nlohmann::json(nullptr);
  j["explanation"] = sample.explanation()
                         ? nlohmann::json(*sample.explanation())
                         : nlohmann::json(nullptr);
  j["label"] = std::string(label_name(sample.label()));
  j["source"] = sample.source();
  return j;
}

namespace {

std::optional<std::string> optional_string(const nlohmann::json& record,
                                           const char* field,
                                           std::size_t index) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw SchemaError(index, field);
  return it->get<std::string>();
}

}  // namespace

PatchSample patch_sample_from_json(const nlohmann::json& record,
                                   std::size_t index) {
  if (!record.is_object()) throw SchemaError(index, "<record>");
  auto required = [&](const char* field) -> std::string {
    auto it = record.find(field);
    if (it == record.end() || !it->is_string()) throw SchemaError(index, field);
    return it->get<std::string>();
  };
  std::string id = required("id");
  std::string diff = required("diff");
  if (diff.empty()) throw SchemaError(index, "diff");
  std::string label_text = required("label");
  Label label;
  if (label_text == "security") {
    label = Label::kSecurity;
  } else if (label_text == "non-security") {
    label = Label::kNonSecurity;
  } else {
    throw SchemaError(index, "label");
  }
  auto description = optional_string(record, "message", index);
  auto explanation = optional_string(record, "explanation", index);
  std::string source = optional_string(record, "source", index).value_or("");
  return PatchSample(std::move(id), std::move(diff), label,
                     std::move(description), std::move(explanation),
                     std::move(source));
}

TokenSequence::TokenSequence(std::vector<std::int32_t> tokens,
                             std::size_t max_tokens)
    : tokens_(std::move(tokens)) {
  if (tokens_.size() > max_tokens) {
    throw InvalidArgument("token sequence of length " +
                          std::to_string(tokens_.size()) +
                          " exceeds max_tokens " + std::to_string(max_tokens));
  }
}

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

EmbeddingMatrix::EmbeddingMatrix(Eigen::MatrixXd values, Modality modality)
    : values_(std::move(values)), modality_(modality) {
  if (!values_.allFinite()) {
    throw InvalidArgument("embedding matrix contains non-finite entries");
  }
}

FusedEmbedding::FusedEmbedding(Eigen::VectorXd values, std::string sample_id)
    : values_(std::move(values)), sample_id_(std::move(sample_id)) {
  if (!values_.allFinite()) {
    throw InvalidArgument("fused embedding contains non-finite entries");
  }
}

}  // namespace llmda
