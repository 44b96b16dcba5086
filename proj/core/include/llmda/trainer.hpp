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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmda/dataset.hpp"
#include "llmda/hyperparams.hpp"
#include "llmda/pipeline.hpp"
#include "llmda/pt_former.hpp"
#include "llmda/random.hpp"
#include "llmda/sbcl.hpp"
#include "llmda/types.hpp"

namespace llmda {

// Logistic head over the fused embedding. w is (3*dim x 1), b is (1 x 1).
struct ClassifierParams {
  Eigen::MatrixXd w;
  Eigen::MatrixXd b;
};

// sigmoid(w . e + b). Throws LengthMismatch when sizes disagree.
double predict_probability(const FusedEmbedding& e, const ClassifierParams& c);
double sigmoid(double z);

// Probability clamp used by bce_loss.
inline constexpr double kProbabilityEpsilon = 1e-12;

// -(1/N) sum [y log p + (1 - y) log(1 - p)] with p clamped to
// [eps, 1 - eps]. Labels are 0/1.
double bce_loss(std::span<const double> probs, std::span<const int> labels);

// kSum: L = L_BCE + L_SBCL. kAlpha: L = alpha * L_BCE + (1 - alpha) * L_SBCL.
enum class LossBlend { kSum, kAlpha };

double combined_loss(double bce, double sbcl, LossBlend blend, double alpha);

// All trainable parameters: fusion stage plus classifier head.
struct Model {
  PTFormerState pt_former;
  ClassifierParams classifier;

  template <typename F>
  void for_each_param(F&& f) {
    pt_former.for_each_param(f);
    f(std::string("classifier.w"), classifier.w);
    f(std::string("classifier.b"), classifier.b);
  }
  template <typename F>
  void for_each_param(F&& f) const {
    pt_former.for_each_param(f);
    f(std::string("classifier.w"), classifier.w);
    f(std::string("classifier.b"), classifier.b);
  }

  Model zeros_like() const;
  std::size_t parameter_count() const;
};

// Fusion stage from init_pt_former; the head is drawn
// U(-1/sqrt(3*dim), 1/sqrt(3*dim)) with b = 0. Uses the "init" substream of
// hp.seed.
Model init_model(const HyperParams& hp, int ff_hidden = 0);

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

nlohmann::json to_json(const AdamWConfig& cfg);

// One decoupled-weight-decay step over every parameter:
//   theta <- theta * (1 - lr * wd)
//   theta <- theta - lr * mhat / (sqrt(vhat) + eps)
// `step` is the count of steps taken so far and is incremented.
void adamw_step(Model& params, const Model& grads, Model& m, Model& v,
                std::uint64_t& step, double lr, double weight_decay,
                const AdamWConfig& cfg = {});

struct TrainOptions {
  AnchorMode anchor_mode = AnchorMode::kAll;
  LossBlend loss_blend = LossBlend::kSum;
  AblationFlags ablation;
  AdamWConfig optimizer;
  double threshold = 0.5;
  int ff_hidden = 0;  // <= 0 means dim
  // When set, one checkpoint per epoch plus best.json land here.
  std::optional<std::filesystem::path> checkpoint_dir;
};

nlohmann::json to_json(const TrainOptions& options);

// Everything needed to resume or to serve predictions. Per-epoch random
// streams are derived from (hp.seed, epoch), so the epoch counter is the
// whole rng state.
struct TrainState {
  HyperParams hp;
  TrainOptions options;
  Model model;
  Model m, v;  // AdamW moments
  std::uint64_t step = 0;
  int epoch = 0;  // epochs completed
};

TrainState init_train_state(const HyperParams& hp,
                            const TrainOptions& options = {});

// Versioned binary checkpoint:
//   magic "LLMDACKP" | u32 version | metadata JSON string | model, m, v
// where each of model/m/v is a PT-Former block followed by the classifier
// w and b matrices. Round trips bit-exact.
inline constexpr std::string_view kCheckpointMagic = "LLMDACKP";
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const TrainState& state, std::ostream& out);
TrainState read_checkpoint(std::istream& in);
// Atomic (temp file + rename).
void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
TrainState load_checkpoint(const std::filesystem::path& path);

// Fused embedding of one encoded sample under the configured fusion mode.
// Dropout is drawn from *dropout_rng only when training.
FusedEmbedding fuse_sample(const EncodedSample& sample, const Model& model,
                           const AblationFlags& flags, bool training,
                           Rng* dropout_rng = nullptr,
                           FuseTrace* trace = nullptr);

struct BatchLoss {
  double bce = 0.0;
  double sbcl = 0.0;
  double total = 0.0;
  // True when the batch could not form a triplet and the SBCL term was 0.
  bool sbcl_skipped = false;
};

// Loss of one batch and, when `grads` is non-null, its gradient with respect
// to every parameter (written, not accumulated). The BCE term is
// differentiated through the logit; the hinge kink takes subgradient 0.
BatchLoss batch_loss(std::span<const EncodedSample* const> batch,
                     const Model& model, const HyperParams& hp,
                     const TrainOptions& options, bool training,
                     Rng* dropout_rng, Rng& mining_rng, Model* grads = nullptr);
BatchLoss batch_loss(std::span<const EncodedSample> batch, const Model& model,
                     const HyperParams& hp, const TrainOptions& options,
                     bool training, Rng* dropout_rng, Rng& mining_rng,
                     Model* grads = nullptr);

struct EpochRecord {
  int epoch = 0;
  double l_bce = 0.0;  // batch means
  double l_sbcl = 0.0;
  double l = 0.0;
  std::optional<double> val_auc;
  std::optional<double> val_f1;
  std::uint64_t seed = 0;
  std::size_t sbcl_skipped_batches = 0;
};

// One run-log line: {epoch, L_BCE, L_SBCL, L, val_AUC, val_F1, seed, ...}.
nlohmann::json to_json(const EpochRecord& record,
                       const AdamWConfig& optimizer = {});
void write_run_log(const std::vector<EpochRecord>& log,
                   const AdamWConfig& optimizer,
                   const std::filesystem::path& path);

struct TrainResult {
  TrainState state;
  std::vector<EpochRecord> log;
  std::optional<std::filesystem::path> last_checkpoint;
  std::optional<std::filesystem::path> best_checkpoint;
};

// Runs epochs state.epoch + 1 .. hp.epochs over class-balanced batches.
// Validation metrics are computed when `validation` is non-empty. Throws
// InvalidArgument when the train set lacks a class and DivergenceDetected
// when a batch loss is not finite.
TrainResult train(const std::vector<EncodedSample>& train_set,
                  const std::vector<EncodedSample>& validation,
                  const HyperParams& hp, const TrainOptions& options = {},
                  std::optional<TrainState> resume = std::nullopt);

// Encodes the splits with `backends` (ablation flags applied) and trains.
TrainResult train(const DatasetSplit& split, const HyperParams& hp,
                  const Backends& backends, const TrainOptions& options = {},
                  std::optional<TrainState> resume = std::nullopt);

struct Prediction {
  std::string sample_id;
  double probability = 0.0;
  Label label = Label::kNonSecurity;
};

// Security iff probability >= threshold. Evaluates in chunks of
// hp.batch_size_eval with dropout off.
std::vector<Prediction> predict(const std::vector<EncodedSample>& samples,
                                const TrainState& state, double threshold = 0.5);
std::vector<Prediction> predict(const std::vector<PatchSample>& samples,
                                const TrainState& state,
                                const Backends& backends,
                                double threshold = 0.5);

// Inference-mode fused embeddings, e.g. for PCA export.
std::vector<FusedEmbedding> fused_embeddings(
    const std::vector<EncodedSample>& samples, const TrainState& state);

}  // namespace llmda
