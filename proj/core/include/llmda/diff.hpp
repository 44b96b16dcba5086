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

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace llmda {

enum class LineTag { kContext, kAdded, kRemoved };

struct DiffLine {
  LineTag tag;
  std::string text;  // without the leading tag character

  bool operator==(const DiffLine&) const = default;
};

struct Hunk {
  long old_start = 0;
  long old_count = 0;
  long new_start = 0;
  long new_count = 0;
  // Trailing text of the "@@ ... @@" header, usually the enclosing function.
  std::string section;
  // File the hunk belongs to; empty when the diff has no file headers.
  std::string path;
  std::vector<DiffLine> lines;

  std::size_t count(LineTag tag) const;

  bool operator==(const Hunk&) const = default;
};

struct ParsedDiff {
  std::vector<Hunk> hunks;
  // First-appearance order, without duplicates.
  std::vector<std::string> files_touched;

  std::size_t added_lines() const;
  std::size_t removed_lines() const;

  bool operator==(const ParsedDiff&) const = default;
};

// Parses a unified diff (plain or git flavoured). Lines outside hunks that are
// not file headers are ignored. Inside a hunk, a bare empty line counts as an
// empty context line, and a hunk that reaches end of input short only of
// context lines (old and new remainders equal) is completed with empty
// context lines; mail and copy/paste routinely strip trailing blanks.
//
// Throws MalformedDiff for an unparseable "@@" header, a body that contradicts
// its header, or added/removed lines past the end of a hunk.
ParsedDiff parse_unified_diff(std::string_view text);

// Canonical text form; parse_unified_diff(serialize_diff(d)) == d for any d
// produced by the parser whose hunks are grouped by file.
std::string serialize_diff(const ParsedDiff& diff);

}  // namespace llmda
