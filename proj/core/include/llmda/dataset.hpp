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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "llmda/types.hpp"

namespace llmda {

enum class DatasetSchema { kJsonl };

// One record per non-blank line: {id, diff, message?, explanation?, label,
// source?}. Records keep file order. Throws SchemaError naming the 0-based
// record index and the offending field.
std::vector<PatchSample> load_dataset(const std::filesystem::path& path,
                                      DatasetSchema schema = DatasetSchema::kJsonl);

void save_dataset(const std::vector<PatchSample>& samples,
                  const std::filesystem::path& path);

struct ClassCounts {
  std::size_t security = 0;
  std::size_t non_security = 0;
  std::size_t total() const { return security + non_security; }
};

ClassCounts count_classes(const std::vector<PatchSample>& samples);
std::map<std::string, ClassCounts> count_by_source(
    const std::vector<PatchSample>& samples);

struct DatasetSplit {
  std::vector<PatchSample> train;
  std::vector<PatchSample> validation;
  std::vector<PatchSample> test;
  std::uint64_t seed = 0;
};

using SplitRatios = std::array<double, 3>;

// Deterministic for a fixed seed. Split sizes follow the ratios by largest
// remainder. With stratify on, every split's security count is within one
// sample of size * global security fraction. Each split keeps input order.
//
// Throws InvalidArgument for ratios that are not positive or do not sum to 1
// (within 1e-9) and for duplicate ids; EmptyClass when stratifying and a class
// is absent.
DatasetSplit split_dataset(const std::vector<PatchSample>& samples,
                           const SplitRatios& ratios, std::uint64_t seed,
                           bool stratify = true);

}  // namespace llmda
