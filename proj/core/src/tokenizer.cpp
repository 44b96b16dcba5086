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

#include "llmda/tokenizer.hpp"

#include <cctype>

#include "llmda/error.hpp"
#include "llmda/random.hpp"

namespace llmda {

namespace {

bool is_word(unsigned char c) { return std::isalnum(c) || c == '_'; }

}  // namespace

HashedVocabTokenizer::HashedVocabTokenizer(std::int32_t vocab_size)
    : vocab_size_(vocab_size) {
  if (vocab_size < 1) throw InvalidArgument("vocab_size must be >= 1");
}

std::vector<std::string> HashedVocabTokenizer::pieces(
    std::string_view text) const {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (is_word(c) || c >= 0x80) {
      std::size_t j = i;
      while (j < text.size()) {
        auto d = static_cast<unsigned char>(text[j]);
        if (!(is_word(d) || d >= 0x80)) break;
        ++j;
      }
      out.emplace_back(text.substr(i, j - i));
      i = j;
    } else {
      out.emplace_back(1, text[i]);
      ++i;
    }
  }
  return out;
}

std::vector<std::int32_t> HashedVocabTokenizer::encode(
    std::string_view text) const {
  std::vector<std::int32_t> ids;
  for (const auto& p : pieces(text)) {
    ids.push_back(static_cast<std::int32_t>(
        fnv1a64(p) % static_cast<std::uint64_t>(vocab_size_)));
  }
  return ids;
}

TokenSequence tokenize(std::string_view text, const Tokenizer& tokenizer,
                       std::size_t max_tokens) {
  if (max_tokens < 1) throw InvalidArgument("max_tokens must be >= 1");
  auto ids = tokenizer.encode(text);
  if (ids.size() > max_tokens) ids.resize(max_tokens);
  return TokenSequence(std::move(ids), max_tokens);
}

}  // namespace llmda
