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
#include <string>
#include <string_view>
#include <vector>

#include "llmda/types.hpp"

namespace llmda {

// Text -> token ids. Backends own their vocabulary.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<std::int32_t> encode(std::string_view text) const = 0;
};

// Fallback tokenizer: runs of [A-Za-z0-9_] and single punctuation characters
// are tokens; whitespace separates. Ids are FNV-1a hashes folded into
// [0, vocab_size).
class HashedVocabTokenizer final : public Tokenizer {
 public:
  explicit HashedVocabTokenizer(std::int32_t vocab_size = 50021);

  std::vector<std::int32_t> encode(std::string_view text) const override;
  std::vector<std::string> pieces(std::string_view text) const;

  std::int32_t vocab_size() const { return vocab_size_; }

 private:
  std::int32_t vocab_size_;
};

// Prefix-truncates the encoded text to max_tokens.
TokenSequence tokenize(std::string_view text, const Tokenizer& tokenizer,
                       std::size_t max_tokens);

}  // namespace llmda
