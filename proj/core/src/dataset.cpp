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

#include "llmda/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "llmda/error.hpp"
#include "llmda/random.hpp"

namespace llmda {

std::vector<PatchSample> load_dataset(const std::filesystem::path& path,
                                      DatasetSchema schema) {
  (void)schema;  // jsonl is the only schema
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path.string());
  std::vector<PatchSample> samples;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw SchemaError(index, "<json>");
    }
    samples.push_back(patch_sample_from_json(record, index));
    ++index;
  }
  return samples;
}

void save_dataset(const std::vector<PatchSample>& samples,
                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset " + path.string());
  for (const auto& s : samples) out << to_json(s).dump() << '\n';
}

ClassCounts count_classes(const std::vector<PatchSample>& samples) {
  ClassCounts c;
  for (const auto& s : samples) {
    (s.label() == Label::kSecurity ? c.security : c.non_security) += 1;
  }
  return c;
}

std::map<std::string, ClassCounts> count_by_source(
    const std::vector<PatchSample>& samples) {
  std::map<std::string, ClassCounts> out;
  for (const auto& s : samples) {
    auto& c = out[s.source()];
    (s.label() == Label::kSecurity ? c.security : c.non_security) += 1;
  }
  return out;
}

namespace {

// Integer apportionment of `total` over `weights` by largest remainder; ties
// go to the lower index.
std::array<std::size_t, 3> apportion(std::size_t total,
                                     const std::array<double, 3>& weights) {
  double wsum = weights[0] + weights[1] + weights[2];
  std::array<std::size_t, 3> out{};
  std::array<double, 3> rem{};
  std::size_t used = 0;
  for (int k = 0; k < 3; ++k) {
    double exact = static_cast<double>(total) * weights[k] / wsum;
    out[k] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rem[k] = exact - static_cast<double>(out[k]);
    used += out[k];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return rem[a] > rem[b]; });
  for (int k = 0; used < total; k = (k + 1) % 3) {
    out[order[k]] += 1;
    ++used;
  }
  return out;
}

}  // namespace

DatasetSplit split_dataset(const std::vector<PatchSample>& samples,
                           const SplitRatios& ratios, std::uint64_t seed,
                           bool stratify) {
  for (double r : ratios) {
    if (!(r > 0.0) || !std::isfinite(r)) {
      throw InvalidArgument("split ratios must be positive");
    }
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    throw InvalidArgument("split ratios must sum to 1");
  }
  {
    std::unordered_set<std::string> ids;
    for (const auto& s : samples) {
      if (!ids.insert(s.id()).second) {
        throw InvalidArgument("duplicate sample id '" + s.id() + "'");
      }
    }
  }

  const std::size_t n = samples.size();
  auto sizes = apportion(n, ratios);
  std::vector<int> assignment(n, 0);
  Rng rng = substream(seed, "split");

  if (stratify) {
    std::vector<std::size_t> sec, non;
    for (std::size_t i = 0; i < n; ++i) {
      (samples[i].label() == Label::kSecurity ? sec : non).push_back(i);
    }
    if (sec.empty()) throw EmptyClass("security");
    if (non.empty()) throw EmptyClass("non-security");
    // Security quota per split: apportion n_sec with weights = split sizes,
    // so quota_k differs from size_k * p by less than one.
    std::array<double, 3> w{static_cast<double>(sizes[0]),
                            static_cast<double>(sizes[1]),
                            static_cast<double>(sizes[2])};
    auto sec_quota = apportion(sec.size(), w);
    std::shuffle(sec.begin(), sec.end(), rng);
    std::shuffle(non.begin(), non.end(), rng);
    std::size_t si = 0, ni = 0;
    for (int k = 0; k < 3; ++k) {
      for (std::size_t j = 0; j < sec_quota[k]; ++j) assignment[sec[si++]] = k;
      for (std::size_t j = sec_quota[k]; j < sizes[k]; ++j) {
        assignment[non[ni++]] = k;
      }
    }
  } else {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t pos = 0;
    for (int k = 0; k < 3; ++k) {
      for (std::size_t j = 0; j < sizes[k]; ++j) assignment[order[pos++]] = k;
    }
  }

  DatasetSplit split;
  split.seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    auto& dst = assignment[i] == 0   ? split.train
                : assignment[i] == 1 ? split.validation
                                     : split.test;
    dst.push_back(samples[i]);
  }
  return split;
}

}  // namespace llmda
