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
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace llmda {

enum class Label { kSecurity, kNonSecurity };

// "security" / "non-security".
std::string_view label_name(Label label);
Label parse_label(std::string_view text);
// 1 for security, 0 otherwise (the y of the BCE objective).
inline int label_value(Label label) {
  return label == Label::kSecurity ? 1 : 0;
}

enum class Modality { kPatch, kExplanation, kDescription, kInstruction };

std::string_view modality_name(Modality modality);
Modality parse_modality(std::string_view text);

// One commit: the diff, the optional developer message and generated
// explanation, and the binary security label.
class PatchSample {
 public:
  PatchSample(std::string id, std::string diff_text, Label label,
              std::optional<std::string> description = std::nullopt,
              std::optional<std::string> explanation = std::nullopt,
              std::string source = {});

  const std::string& id() const { return id_; }
  const std::string& diff_text() const { return diff_text_; }
  Label label() const { return label_; }
  const std::optional<std::string>& description() const { return description_; }
  const std::optional<std::string>& explanation() const { return explanation_; }
  const std::string& source() const { return source_; }

  void set_explanation(std::string text) { explanation_ = std::move(text); }
  void clear_explanation() { explanation_.reset(); }

  bool operator==(const PatchSample&) const = default;

 private:
  std::string id_;
  std::string diff_text_;
  Label label_;
  std::optional<std::string> description_;
  std::optional<std::string> explanation_;
  std::string source_;
};

// Dataset record layout: {id, diff, message, explanation, label, source}.
nlohmann::json to_json(const PatchSample& sample);
// Throws SchemaError(index, field) for missing or invalid fields.
PatchSample patch_sample_from_json(const nlohmann::json& record,
                                   std::size_t index = 0);

// Token ids after truncation to the model's input budget.
class TokenSequence {
 public:
  TokenSequence() = default;
  TokenSequence(std::vector<std::int32_t> tokens, std::size_t max_tokens);

  const std::vector<std::int32_t>& tokens() const { return tokens_; }
  std::size_t length() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }

  bool operator==(const TokenSequence&) const = default;

 private:
  std::vector<std::int32_t> tokens_;
};

// Token-level representation of one modality, shape (seq_len, dim).
class EmbeddingMatrix {
 public:
  EmbeddingMatrix(Eigen::MatrixXd values, Modality modality);

  const Eigen::MatrixXd& values() const { return values_; }
  Modality modality() const { return modality_; }
  Eigen::Index seq_len() const { return values_.rows(); }
  Eigen::Index dim() const { return values_.cols(); }

 private:
  Eigen::MatrixXd values_;
  Modality modality_;
};

// Fixed-length per-sample vector produced by the fusion stage.
class FusedEmbedding {
 public:
  FusedEmbedding(Eigen::VectorXd values, std::string sample_id = {});

  const Eigen::VectorXd& values() const { return values_; }
  const std::string& sample_id() const { return sample_id_; }
  Eigen::Index size() const { return values_.size(); }

 private:
  Eigen::VectorXd values_;
  std::string sample_id_;
};

bool all_finite(const Eigen::MatrixXd& m);

}  // namespace llmda
