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

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "llmda/diff.hpp"
#include "llmda/hyperparams.hpp"
#include "llmda/metrics.hpp"
#include "llmda/pt_former.hpp"
#include "llmda/random.hpp"
#include "llmda/sbcl.hpp"

namespace llmda {
namespace {

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m(k) = n(rng);
  return m;
}

HyperParams bench_hp(int dim) {
  HyperParams hp = default_hyperparams();
  hp.dim = dim;
  hp.num_heads = 4;
  return hp;
}

// Args: dim, tokens per modality.
void BM_Fuse(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const auto len = state.range(1);
  Rng rng(1);
  PTFormerState s = init_pt_former(bench_hp(dim), 2);
  EmbeddingMatrix pa(gaussian(len, dim, rng), Modality::kPatch);
  EmbeddingMatrix ex(gaussian(len, dim, rng), Modality::kExplanation);
  EmbeddingMatrix desc(gaussian(len, dim, rng), Modality::kDescription);
  EmbeddingMatrix inst(gaussian(16, dim, rng), Modality::kInstruction);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fuse({pa, ex, desc, inst}, s, false));
  }
}
BENCHMARK(BM_Fuse)->Args({64, 64})->Args({128, 128})->Args({256, 512});

void BM_SelfAttention(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  Rng rng(3);
  PTFormerState s = init_pt_former(bench_hp(dim), 4);
  EmbeddingMatrix e(gaussian(state.range(1), dim, rng), Modality::kDescription);
  for (auto _ : state) benchmark::DoNotOptimize(self_attention(e, s.self_attn));
}
BENCHMARK(BM_SelfAttention)->Args({128, 32})->Args({128, 128})->Args({128, 512});

void BM_MineTriplets(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(5);
  std::vector<FusedEmbedding> batch;
  std::vector<Label> labels;
  for (std::size_t i = 0; i < n; ++i) {
    batch.emplace_back(gaussian(768, 1, rng).col(0));
    labels.push_back(i % 2 == 0 ? Label::kSecurity : Label::kNonSecurity);
  }
  Rng mining(0);
  for (auto _ : state) benchmark::DoNotOptimize(mine_triplets(batch, labels, mining));
}
BENCHMARK(BM_MineTriplets)->Arg(16)->Arg(64);

void BM_ComputeAuc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> p(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = u(rng);
    y[i] = static_cast<int>(i % 2);
  }
  for (auto _ : state) benchmark::DoNotOptimize(compute_auc(p, y));
}
BENCHMARK(BM_ComputeAuc)->Arg(1000)->Arg(100000);

void BM_ParseDiff(benchmark::State& state) {
  std::string text = "diff --git a/f.c b/f.c\n--- a/f.c\n+++ b/f.c\n";
  for (int h = 0; h < state.range(0); ++h) {
    const std::string start = std::to_string(10 + h * 20);
    text += "@@ -" + start + ",4 +" + start + ",5 @@ int f(void)\n";
    text += " \tint a = 0;\n-\ta = g();\n+\ta = g(1);\n+\tif (a < 0) return a;\n";
    text += " \treturn a;\n \t}\n";
  }
  for (auto _ : state) benchmark::DoNotOptimize(parse_unified_diff(text));
  state.SetBytesProcessed(state.iterations() * static_cast<long>(text.size()));
}
BENCHMARK(BM_ParseDiff)->Arg(3)->Arg(200);

}  // namespace
}  // namespace llmda

BENCHMARK_MAIN();
