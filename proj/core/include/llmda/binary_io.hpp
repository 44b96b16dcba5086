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
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "llmda/error.hpp"

namespace llmda {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written in host order, assumed little-endian");

// Little-endian primitives shared by the embedding and checkpoint formats.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  void magic(std::string_view m) { out_.write(m.data(), m.size()); }

  template <typename T>
  void pod(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }

  void string(std::string_view s) {
    pod<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), s.size());
  }

  // rows, cols, then column-major doubles.
  void matrix(const Eigen::MatrixXd& m) {
    pod<std::uint32_t>(static_cast<std::uint32_t>(m.rows()));
    pod<std::uint32_t>(static_cast<std::uint32_t>(m.cols()));
    out_.write(reinterpret_cast<const char*>(m.data()),
               static_cast<std::streamsize>(sizeof(double) * m.size()));
  }

  bool ok() const { return static_cast<bool>(out_); }

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& in) : in_(in) {}

  void expect_magic(std::string_view m) {
    std::string got(m.size(), '\0');
    in_.read(got.data(), static_cast<std::streamsize>(got.size()));
    if (!in_ || got != m) {
      throw FormatError("bad magic: expected '" + std::string(m) + "'");
    }
  }

  template <typename T>
  T pod() {
    T value{};
    in_.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in_) throw FormatError("truncated binary file");
    return value;
  }

  std::string string() {
    auto n = pod<std::uint32_t>();
    std::string s(n, '\0');
    in_.read(s.data(), n);
    if (!in_) throw FormatError("truncated binary file");
    return s;
  }

  Eigen::MatrixXd matrix() {
    auto rows = pod<std::uint32_t>();
    auto cols = pod<std::uint32_t>();
    Eigen::MatrixXd m(rows, cols);
    in_.read(reinterpret_cast<char*>(m.data()),
             static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!in_) throw FormatError("truncated binary file");
    return m;
  }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::istream& in_;
};

}  // namespace llmda
