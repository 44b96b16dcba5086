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
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "llmda/hyperparams.hpp"
#include "llmda/random.hpp"
#include "llmda/types.hpp"

namespace llmda {

// Multi-head self-attention; one (dim x dim/h) query, key and value
// projection per head.
struct AttentionParams {
  std::vector<Eigen::MatrixXd> wq, wk, wv;

  int num_heads() const { return static_cast<int>(wq.size()); }
};

// Single-head cross-attention, queries from the patch, keys and values from
// the explanation. All projections are (dim x dim).
struct CrossAttentionParams {
  Eigen::MatrixXd wq, wk, wv;
};

// Dense(dim -> hidden), ReLU, dropout, Dense(hidden -> dim). Biases are
// stored as 1-row matrices.
struct FeedForwardParams {
  Eigen::MatrixXd w1, b1, w2, b2;
};

// Every trainable parameter of the fusion stage. The same type holds
// gradients and optimizer moments.
struct PTFormerState {
  AttentionParams self_attn;  // shared by the three text modalities
  CrossAttentionParams cross_attn;
  FeedForwardParams ff_pa_ex, ff_desc, ff_inst;
  double dropout_rate = 0.0;

  int dim() const { return static_cast<int>(cross_attn.wq.rows()); }
  int num_heads() const { return self_attn.num_heads(); }
  int ff_hidden() const { return static_cast<int>(ff_pa_ex.w1.cols()); }

  // Visits every parameter matrix in a fixed order with a stable name.
  template <typename F>
  void for_each_param(F&& f) {
    visit(*this, f);
  }
  template <typename F>
  void for_each_param(F&& f) const {
    visit(*this, f);
  }

  // Same shapes, all zeros.
  PTFormerState zeros_like() const;
  std::size_t parameter_count() const;

 private:
  template <typename Self, typename F>
  static void visit(Self& s, F& f) {
    for (int i = 0; i < s.self_attn.num_heads(); ++i) {
      const std::string h = std::to_string(i);
      f("self_attn.wq." + h, s.self_attn.wq[i]);
      f("self_attn.wk." + h, s.self_attn.wk[i]);
      f("self_attn.wv." + h, s.self_attn.wv[i]);
    }
    f(std::string("cross_attn.wq"), s.cross_attn.wq);
    f(std::string("cross_attn.wk"), s.cross_attn.wk);
    f(std::string("cross_attn.wv"), s.cross_attn.wv);
    auto ff = [&](const std::string& p, auto& block) {
      f(p + ".w1", block.w1);
      f(p + ".b1", block.b1);
      f(p + ".w2", block.w2);
      f(p + ".b2", block.b2);
    };
    ff("ff_pa_ex", s.ff_pa_ex);
    ff("ff_desc", s.ff_desc);
    ff("ff_inst", s.ff_inst);
  }
};

// Attention projections are drawn i.i.d. N(0, 1). Feed-forward weights and
// biases are drawn U(-1/sqrt(fan_in), 1/sqrt(fan_in)). ff_hidden <= 0 means
// ff_hidden = dim. Deterministic per seed.
PTFormerState init_pt_former(const HyperParams& hp, std::uint64_t rng_seed,
                             int ff_hidden = 0);

// Row-wise numerically stable softmax.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores);

// Per-head attention weights softmax(E Wq (E Wk)^T / sqrt(dim)).
std::vector<Eigen::MatrixXd> self_attention_weights(
    const Eigen::MatrixXd& e, const AttentionParams& params);

// Heads concatenated along the feature axis; output shape equals input shape.
EmbeddingMatrix self_attention(const EmbeddingMatrix& e,
                               const AttentionParams& params);

Eigen::MatrixXd cross_attention_weights(const Eigen::MatrixXd& e_pa,
                                        const Eigen::MatrixXd& e_ex,
                                        const CrossAttentionParams& params);

// softmax(E_pa Wq (E_ex Wk)^T / sqrt(dim)) E_ex Wv, shape (patch rows, dim).
EmbeddingMatrix cross_attention(const EmbeddingMatrix& e_pa,
                                const EmbeddingMatrix& e_ex,
                                const CrossAttentionParams& params);

// Feed-forward block; `mask` (same shape as the hidden activation) carries
// the inverted-dropout multipliers, or is empty for inference.
Eigen::MatrixXd feed_forward(const Eigen::MatrixXd& x,
                             const FeedForwardParams& params,
                             const Eigen::MatrixXd& mask = {});

// The four per-sample inputs of the fusion stage.
struct FuseInputs {
  const EmbeddingMatrix& patch;
  const EmbeddingMatrix& explanation;
  const EmbeddingMatrix& description;
  const EmbeddingMatrix& instruction;
};

// Intermediates recorded by the forward pass for the backward pass.
struct FuseTrace {
  struct Head {
    Eigen::MatrixXd q, k, v, a;
  };
  struct SelfAttn {
    std::vector<Head> heads;
    Eigen::MatrixXd out;
  };
  struct FeedForward {
    Eigen::MatrixXd x, z1, mask, hidden, y;
  };
  Eigen::MatrixXd e_pa, e_ex, e_desc, e_inst;
  SelfAttn sa_ex, sa_desc, sa_inst;
  Head ca;
  Eigen::MatrixXd ca_out;
  FeedForward ff_pa_ex, ff_desc, ff_inst;
};

// self-attention on each text modality, cross-attention(patch, explanation),
// feed-forward per branch, mean-pool over rows, concatenate -> 3 * dim.
// Dropout is active only when training; it then draws from *dropout_rng,
// which must be non-null if dropout_rate > 0.
FusedEmbedding fuse(const FuseInputs& in, const PTFormerState& state,
                    bool training, Rng* dropout_rng = nullptr,
                    FuseTrace* trace = nullptr, std::string sample_id = {});

// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(fused) for the
// sample whose forward pass produced `trace`.
void fuse_backward(const FuseTrace& trace, const PTFormerState& state,
                   const Eigen::VectorXd& upstream, PTFormerState& grads);

// Parameter gradients for a batch: forward with trace, then backward with
// the per-sample upstream gradients. The dropout stream (if training) is
// consumed in batch order, exactly as by a sequence of fuse() calls.
PTFormerState pt_former_gradients(std::span<const FuseInputs> batch,
                                  const PTFormerState& state,
                                  std::span<const Eigen::VectorXd> upstream,
                                  bool training = false,
                                  Rng* dropout_rng = nullptr);

// Fusion with no trainable stage: mean of the stacked patch and explanation
// rows, mean of description rows, mean of instruction rows; 3 * dim.
FusedEmbedding plain_pooled_concat(const FuseInputs& in,
                                   std::string sample_id = {});

// Versioned binary checkpoint:
//   magic "LLMDAPTF" | u32 version | u32 dim | u32 heads | u32 ff_hidden |
//   f64 dropout | u32 param count | per param: name, u32 rows, u32 cols,
//   rows*cols f64 column-major.
inline constexpr std::string_view kPTFormerMagic = "LLMDAPTF";
inline constexpr std::uint32_t kPTFormerVersion = 1;

void write_pt_former(const PTFormerState& state, std::ostream& out);
PTFormerState read_pt_former(std::istream& in);
void save_pt_former(const PTFormerState& state,
                    const std::filesystem::path& path);
PTFormerState load_pt_former(const std::filesystem::path& path);

}  // namespace llmda
