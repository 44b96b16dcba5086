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

#include "llmda/diff.hpp"

#include <algorithm>
#include <charconv>
#include <optional>

#include "llmda/error.hpp"

namespace llmda {

std::size_t Hunk::count(LineTag tag) const {
  return static_cast<std::size_t>(
      std::count_if(lines.begin(), lines.end(),
                    [tag](const DiffLine& l) { return l.tag == tag; }));
}

std::size_t ParsedDiff::added_lines() const {
  std::size_t n = 0;
  for (const auto& h : hunks) n += h.count(LineTag::kAdded);
  return n;
}

std::size_t ParsedDiff::removed_lines() const {
  std::size_t n = 0;
  for (const auto& h : hunks) n += h.count(LineTag::kRemoved);
  return n;
}

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = nl == std::string_view::npos
                                ? text.substr(pos)
                                : text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return lines;
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

// Reads "<start>[,<count>]"; an omitted count means 1.
bool parse_range(std::string_view& s, long& start, long& count) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), start);
  if (ec != std::errc() || start < 0) return false;
  s.remove_prefix(static_cast<std::size_t>(p - s.data()));
  count = 1;
  if (!s.empty() && s.front() == ',') {
    s.remove_prefix(1);
    auto [q, ec2] = std::from_chars(s.data(), s.data() + s.size(), count);
    if (ec2 != std::errc() || count < 0) return false;
    s.remove_prefix(static_cast<std::size_t>(q - s.data()));
  }
  return true;
}

std::optional<Hunk> parse_hunk_header(std::string_view line) {
  Hunk h;
  std::string_view s = line;
  if (!starts_with(s, "@@ -")) return std::nullopt;
  s.remove_prefix(4);
  if (!parse_range(s, h.old_start, h.old_count)) return std::nullopt;
  if (!starts_with(s, " +")) return std::nullopt;
  s.remove_prefix(2);
  if (!parse_range(s, h.new_start, h.new_count)) return std::nullopt;
  if (!starts_with(s, " @@")) return std::nullopt;
  s.remove_prefix(3);
  if (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  h.section = std::string(s);
  return h;
}

// "a/src/x.c\t2024-01-01 ..." -> "src/x.c"; "/dev/null" stays as is.
std::string header_path(std::string_view s) {
  if (auto tab = s.find('\t'); tab != std::string_view::npos) {
    s = s.substr(0, tab);
  }
  if (s == "/dev/null") return std::string(s);
  if (starts_with(s, "a/") || starts_with(s, "b/")) s.remove_prefix(2);
  return std::string(s);
}

class Parser {
 public:
  ParsedDiff run(std::string_view text) {
    auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      line_no_ = i + 1;
      if (hunk_) {
        hunk_line(lines[i]);
      } else {
        outside_line(lines[i]);
      }
    }
    if (hunk_) finish_at_eof();
    return std::move(out_);
  }

 private:
  void touch(const std::string& path) {
    if (path.empty() || path == "/dev/null") return;
    if (std::find(out_.files_touched.begin(), out_.files_touched.end(),
                  path) == out_.files_touched.end()) {
      out_.files_touched.push_back(path);
    }
  }

  void outside_line(std::string_view line) {
    if (starts_with(line, "@@")) {
      auto h = parse_hunk_header(line);
      if (!h) throw MalformedDiff(line_no_, "unparseable hunk header");
      h->path = path_;
      old_left_ = h->old_count;
      new_left_ = h->new_count;
      hunk_ = std::move(*h);
      just_closed_ = false;
      if (old_left_ == 0 && new_left_ == 0) close_hunk();
      return;
    }
    if (starts_with(line, "diff --git ")) {
      just_closed_ = false;
      std::string_view rest = line.substr(11);
      if (auto b = rest.rfind(" b/"); b != std::string_view::npos) {
        path_ = header_path(rest.substr(b + 1));
        touch(path_);
      }
      return;
    }
    if (starts_with(line, "--- ")) {
      just_closed_ = false;
      old_path_ = header_path(line.substr(4));
      return;
    }
    if (starts_with(line, "+++ ")) {
      just_closed_ = false;
      std::string p = header_path(line.substr(4));
      path_ = p == "/dev/null" ? old_path_ : p;
      touch(path_);
      return;
    }
    if (just_closed_ && !line.empty() && line != "--" && line != "-- " &&
        (line.front() == '+' || line.front() == '-' || line.front() == ' ')) {
      throw MalformedDiff(line_no_, "hunk body longer than its header");
    }
  }

  void hunk_line(std::string_view line) {
    if (!line.empty() && line.front() == '\\') return;  // "\ No newline ..."
    LineTag tag;
    std::string_view body;
    if (line.empty()) {
      tag = LineTag::kContext;
    } else if (line.front() == ' ') {
      tag = LineTag::kContext;
      body = line.substr(1);
    } else if (line.front() == '+') {
      tag = LineTag::kAdded;
      body = line.substr(1);
    } else if (line.front() == '-') {
      tag = LineTag::kRemoved;
      body = line.substr(1);
    } else {
      throw MalformedDiff(line_no_, "hunk body shorter than its header");
    }
    bool uses_old = tag != LineTag::kAdded;
    bool uses_new = tag != LineTag::kRemoved;
    if ((uses_old && old_left_ == 0) || (uses_new && new_left_ == 0)) {
      throw MalformedDiff(line_no_, "hunk body contradicts its header counts");
    }
    if (uses_old) --old_left_;
    if (uses_new) --new_left_;
    hunk_->lines.push_back({tag, std::string(body)});
    if (old_left_ == 0 && new_left_ == 0) close_hunk();
  }

  void finish_at_eof() {
    if (old_left_ != new_left_) {
      throw MalformedDiff(line_no_, "hunk body contradicts its header counts");
    }
    while (old_left_ > 0) {
      hunk_->lines.push_back({LineTag::kContext, {}});
      --old_left_;
      --new_left_;
    }
    close_hunk();
  }

  void close_hunk() {
    out_.hunks.push_back(std::move(*hunk_));
    hunk_.reset();
    just_closed_ = true;
  }

  ParsedDiff out_;
  std::optional<Hunk> hunk_;
  long old_left_ = 0;
  long new_left_ = 0;
  std::string path_;
  std::string old_path_;
  bool just_closed_ = false;
  std::size_t line_no_ = 0;
};

void write_hunk(const Hunk& h, std::string& out) {
  out += "@@ -" + std::to_string(h.old_start) + "," +
         std::to_string(h.old_count) + " +" + std::to_string(h.new_start) +
         "," + std::to_string(h.new_count) + " @@";
  if (!h.section.empty()) out += " " + h.section;
  out += '\n';
  for (const auto& l : h.lines) {
    switch (l.tag) {
      case LineTag::kContext:
        out += ' ';
        break;
      case LineTag::kAdded:
        out += '+';
        break;
      case LineTag::kRemoved:
        out += '-';
        break;
    }
    out += l.text;
    out += '\n';
  }
}

}  // namespace

ParsedDiff parse_unified_diff(std::string_view text) {
  if (text.empty()) throw MalformedDiff(0, "empty diff");
  return Parser().run(text);
}

std::string serialize_diff(const ParsedDiff& diff) {
  std::string out;
  for (const auto& h : diff.hunks) {
    if (h.path.empty()) write_hunk(h, out);
  }
  for (const auto& f : diff.files_touched) {
    out += "diff --git a/" + f + " b/" + f + "\n";
    out += "--- a/" + f + "\n+++ b/" + f + "\n";
    for (const auto& h : diff.hunks) {
      if (h.path == f) write_hunk(h, out);
    }
  }
  return out;
}

}  // namespace llmda
