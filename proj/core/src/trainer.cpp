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

#include "llmda/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "llmda/binary_io.hpp"
#include "llmda/error.hpp"
#include "llmda/metrics.hpp"

namespace llmda {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double predict_probability(const FusedEmbedding& e, const ClassifierParams& c) {
  if (e.size() != c.w.rows()) {
    throw LengthMismatch(static_cast<std::size_t>(e.size()),
                         static_cast<std::size_t>(c.w.rows()));
  }
  return sigmoid(e.values().dot(c.w.col(0)) + c.b(0, 0));
}

double bce_loss(std::span<const double> probs, std::span<const int> labels) {
  if (probs.size() != labels.size()) {
    throw LengthMismatch(probs.size(), labels.size());
  }
  if (probs.empty()) throw InvalidArgument("bce_loss needs at least one sample");
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    double p = std::clamp(probs[i], kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
    sum += labels[i] == 1 ? std::log(p) : std::log1p(-p);
  }
  return -sum / static_cast<double>(probs.size());
}

double combined_loss(double bce, double sbcl, LossBlend blend, double alpha) {
  if (blend == LossBlend::kSum) return bce + sbcl;
  return alpha * bce + (1.0 - alpha) * sbcl;
}

Model Model::zeros_like() const {
  return {pt_former.zeros_like(),
          {MatrixXd::Zero(classifier.w.rows(), classifier.w.cols()),
           MatrixXd::Zero(classifier.b.rows(), classifier.b.cols())}};
}

std::size_t Model::parameter_count() const {
  return pt_former.parameter_count() +
         static_cast<std::size_t>(classifier.w.size() + classifier.b.size());
}

Model init_model(const HyperParams& hp, int ff_hidden) {
  hp.validate();
  Model model;
  model.pt_former = init_pt_former(hp, hp.seed, ff_hidden);
  const int in = 3 * hp.dim;
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Rng rng = substream(hp.seed, "init", 1);
  std::uniform_real_distribution<double> u(-bound, bound);
  model.classifier.w = MatrixXd(in, 1);
  for (Eigen::Index i = 0; i < in; ++i) model.classifier.w(i, 0) = u(rng);
  model.classifier.b = MatrixXd::Zero(1, 1);
  return model;
}

nlohmann::json to_json(const AdamWConfig& cfg) {
  return {{"name", "adamw"}, {"beta1", cfg.beta1}, {"beta2", cfg.beta2},
          {"eps", cfg.eps}};
}

namespace {

std::vector<MatrixXd*> param_list(Model& m) {
  std::vector<MatrixXd*> out;
  m.for_each_param([&](const std::string&, MatrixXd& x) { out.push_back(&x); });
  return out;
}

std::vector<const MatrixXd*> param_list(const Model& m) {
  std::vector<const MatrixXd*> out;
  m.for_each_param(
      [&](const std::string&, const MatrixXd& x) { out.push_back(&x); });
  return out;
}

}  // namespace

void adamw_step(Model& params, const Model& grads, Model& m, Model& v,
                std::uint64_t& step, double lr, double weight_decay,
                const AdamWConfig& cfg) {
  auto p = param_list(params);
  auto g = param_list(grads);
  auto mm = param_list(m);
  auto vv = param_list(v);
  if (p.size() != g.size() || p.size() != mm.size() || p.size() != vv.size()) {
    throw LengthMismatch(p.size(), g.size());
  }
  ++step;
  const double t = static_cast<double>(step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < p.size(); ++i) {
    MatrixXd& theta = *p[i];
    const MatrixXd& grad = *g[i];
    *mm[i] = cfg.beta1 * *mm[i] + (1.0 - cfg.beta1) * grad;
    *vv[i] = cfg.beta2 * *vv[i] + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    theta *= (1.0 - lr * weight_decay);
    theta.array() -= lr * (mm[i]->array() / c1) /
                     ((vv[i]->array() / c2).sqrt() + cfg.eps);
  }
}

namespace {

std::string anchor_mode_name(AnchorMode m) {
  return m == AnchorMode::kAll ? "all" : "random_one";
}

AnchorMode parse_anchor_mode(const std::string& s) {
  if (s == "all") return AnchorMode::kAll;
  if (s == "random_one") return AnchorMode::kRandomOne;
  throw InvalidArgument("unknown anchor mode '" + s + "'");
}

std::string loss_blend_name(LossBlend b) {
  return b == LossBlend::kSum ? "sum" : "alpha";
}

LossBlend parse_loss_blend(const std::string& s) {
  if (s == "sum") return LossBlend::kSum;
  if (s == "alpha") return LossBlend::kAlpha;
  throw InvalidArgument("unknown loss blend '" + s + "'");
}

TrainOptions options_from_json(const nlohmann::json& j) {
  TrainOptions o;
  o.anchor_mode = parse_anchor_mode(j.at("anchor_mode").get<std::string>());
  o.loss_blend = parse_loss_blend(j.at("loss_blend").get<std::string>());
  o.ablation = ablation_from_json(j.at("ablation"));
  const auto& opt = j.at("optimizer");
  o.optimizer.beta1 = opt.at("beta1").get<double>();
  o.optimizer.beta2 = opt.at("beta2").get<double>();
  o.optimizer.eps = opt.at("eps").get<double>();
  o.threshold = j.at("threshold").get<double>();
  o.ff_hidden = j.at("ff_hidden").get<int>();
  return o;
}

void write_model(const Model& m, BinaryWriter& w, std::ostream& out) {
  write_pt_former(m.pt_former, out);
  w.matrix(m.classifier.w);
  w.matrix(m.classifier.b);
}

Model read_model(BinaryReader& r, std::istream& in) {
  Model m;
  m.pt_former = read_pt_former(in);
  m.classifier.w = r.matrix();
  m.classifier.b = r.matrix();
  if (m.classifier.w.rows() != 3 * m.pt_former.dim() ||
      m.classifier.w.cols() != 1 || m.classifier.b.size() != 1) {
    throw FormatError("classifier shape does not match the fusion width");
  }
  return m;
}

}  // namespace

nlohmann::json to_json(const TrainOptions& o) {
  return {
      {"anchor_mode", anchor_mode_name(o.anchor_mode)},
      {"loss_blend", loss_blend_name(o.loss_blend)},
      {"ablation", to_json(o.ablation)},
      {"optimizer", to_json(o.optimizer)},
      {"threshold", o.threshold},
      {"ff_hidden", o.ff_hidden},
  };
}

TrainState init_train_state(const HyperParams& hp, const TrainOptions& options) {
  TrainState s;
  s.hp = hp;
  s.options = options;
  s.model = init_model(hp, options.ff_hidden);
  s.m = s.model.zeros_like();
  s.v = s.model.zeros_like();
  return s;
}

void write_checkpoint(const TrainState& state, std::ostream& out) {
  BinaryWriter w(out);
  w.magic(kCheckpointMagic);
  w.pod<std::uint32_t>(kCheckpointVersion);
  nlohmann::json meta = {
      {"hp", to_json(state.hp)},
      {"options", to_json(state.options)},
      {"step", state.step},
      {"epoch", state.epoch},
  };
  w.string(meta.dump());
  write_model(state.model, w, out);
  write_model(state.m, w, out);
  write_model(state.v, w, out);
  if (!w.ok()) throw IoError("checkpoint write failed");
}

TrainState read_checkpoint(std::istream& in) {
  BinaryReader r(in);
  r.expect_magic(kCheckpointMagic);
  auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  TrainState s;
  try {
    auto meta = nlohmann::json::parse(r.string());
    s.hp = hyperparams_from_json(meta.at("hp"));
    s.options = options_from_json(meta.at("options"));
    s.step = meta.at("step").get<std::uint64_t>();
    s.epoch = meta.at("epoch").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad checkpoint metadata: ") + e.what());
  }
  s.model = read_model(r, in);
  s.m = read_model(r, in);
  s.v = read_model(r, in);
  return s;
}

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    write_checkpoint(state, out);
    out.flush();
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_checkpoint(in);
}

FusedEmbedding fuse_sample(const EncodedSample& sample, const Model& model,
                           const AblationFlags& flags, bool training,
                           Rng* dropout_rng, FuseTrace* trace) {
  if (flags.no_ptformer) return plain_pooled_concat(sample.inputs(), sample.id);
  return fuse(sample.inputs(), model.pt_former, training, dropout_rng, trace,
              sample.id);
}

BatchLoss batch_loss(std::span<const EncodedSample* const> batch,
                     const Model& model, const HyperParams& hp,
                     const TrainOptions& options, bool training,
                     Rng* dropout_rng, Rng& mining_rng, Model* grads) {
  const std::size_t n = batch.size();
  if (n == 0) throw InvalidArgument("empty batch");
  const AblationFlags& flags = options.ablation;
  const bool trace_fusion = grads != nullptr && !flags.no_ptformer;

  std::vector<FuseTrace> traces(trace_fusion ? n : 0);
  std::vector<FusedEmbedding> fused;
  std::vector<Label> labels;
  std::vector<int> y;
  std::vector<double> probs;
  fused.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    fused.push_back(fuse_sample(*batch[i], model, flags, training, dropout_rng,
                                trace_fusion ? &traces[i] : nullptr));
    labels.push_back(batch[i]->label);
    y.push_back(label_value(batch[i]->label));
    probs.push_back(predict_probability(fused.back(), model.classifier));
  }

  BatchLoss out;
  out.bce = bce_loss(probs, y);
  std::optional<SbclResult> sbcl;
  if (!flags.no_sbcl) {
    try {
      sbcl = sbcl_batch_loss(fused, labels, hp.margin, mining_rng,
                             options.anchor_mode);
      out.sbcl = sbcl->loss;
    } catch (const InsufficientClassMembers&) {
      out.sbcl_skipped = true;
    }
  }

  double w_bce = 1.0, w_sbcl = 1.0;
  if (flags.no_sbcl) {
    out.total = out.bce;
    w_sbcl = 0.0;
  } else {
    out.total = combined_loss(out.bce, out.sbcl, options.loss_blend, hp.alpha);
    if (options.loss_blend == LossBlend::kAlpha) {
      w_bce = hp.alpha;
      w_sbcl = 1.0 - hp.alpha;
    }
  }
  if (grads == nullptr) return out;

  *grads = model.zeros_like();
  const VectorXd& w = model.classifier.w.col(0);
  for (std::size_t i = 0; i < n; ++i) {
    // d(BCE)/d(logit) is (p - y) / N where the clamp is inactive.
    const double p = probs[i];
    double g = 0.0;
    if (p >= kProbabilityEpsilon && p <= 1.0 - kProbabilityEpsilon) {
      g = w_bce * (p - static_cast<double>(y[i])) / static_cast<double>(n);
    }
    grads->classifier.w.col(0) += g * fused[i].values();
    grads->classifier.b(0, 0) += g;
    if (!trace_fusion) continue;
    VectorXd upstream = g * w;
    if (sbcl) upstream += w_sbcl * sbcl->gradients[i];
    fuse_backward(traces[i], model.pt_former, upstream, grads->pt_former);
  }
  return out;
}

BatchLoss batch_loss(std::span<const EncodedSample> batch, const Model& model,
                     const HyperParams& hp, const TrainOptions& options,
                     bool training, Rng* dropout_rng, Rng& mining_rng,
                     Model* grads) {
  std::vector<const EncodedSample*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& s : batch) ptrs.push_back(&s);
  return batch_loss(ptrs, model, hp, options, training, dropout_rng, mining_rng,
                    grads);
}

nlohmann::json to_json(const EpochRecord& r, const AdamWConfig& optimizer) {
  auto opt = [](const std::optional<double>& x) {
    return x ? nlohmann::json(*x) : nlohmann::json(nullptr);
  };
  return {
      {"epoch", r.epoch},
      {"L_BCE", r.l_bce},
      {"L_SBCL", r.l_sbcl},
      {"L", r.l},
      {"val_AUC", opt(r.val_auc)},
      {"val_F1", opt(r.val_f1)},
      {"seed", r.seed},
      {"sbcl_skipped_batches", r.sbcl_skipped_batches},
      {"optimizer", to_json(optimizer)},
  };
}

void write_run_log(const std::vector<EpochRecord>& log,
                   const AdamWConfig& optimizer,
                   const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : log) out << to_json(r, optimizer).dump() << '\n';
  if (!out) throw IoError("cannot write " + path.string());
}

namespace {

std::filesystem::path epoch_checkpoint_path(const std::filesystem::path& dir,
                                            int epoch) {
  char name[32];
  std::snprintf(name, sizeof(name), "epoch_%04d.ckpt", epoch);
  return dir / name;
}

void check_sample_dims(const EncodedSample& s, int dim) {
  for (const EmbeddingMatrix* m :
       {&s.patch, &s.explanation, &s.description, &s.instruction}) {
    if (m->dim() != dim || m->seq_len() < 1) {
      throw InvalidArgument("sample '" + s.id + "' has a " +
                            std::string(modality_name(m->modality())) +
                            " matrix of shape " + std::to_string(m->seq_len()) +
                            "x" + std::to_string(m->dim()) + ", expected width " +
                            std::to_string(dim));
    }
  }
}

// Higher validation F1 wins, then higher AUC; without validation the lower
// training loss wins. Earlier epochs win exact ties.
bool better(const EpochRecord& a, const EpochRecord& b) {
  if (a.val_f1 && b.val_f1) {
    if (*a.val_f1 != *b.val_f1) return *a.val_f1 > *b.val_f1;
    return a.val_auc.value_or(-1.0) > b.val_auc.value_or(-1.0);
  }
  return a.l < b.l;
}

void write_best_pointer(const std::filesystem::path& dir, const EpochRecord& r,
                        const std::filesystem::path& ckpt) {
  nlohmann::json j = to_json(r);
  j.erase("optimizer");
  j["checkpoint"] = ckpt.filename().string();
  std::filesystem::path tmp = dir / "best.json.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << j.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, dir / "best.json");
}

}  // namespace

TrainResult train(const std::vector<EncodedSample>& train_set,
                  const std::vector<EncodedSample>& validation,
                  const HyperParams& hp, const TrainOptions& options,
                  std::optional<TrainState> resume) {
  hp.validate();
  std::vector<std::size_t> sec, non;
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    (train_set[i].label == Label::kSecurity ? sec : non).push_back(i);
  }
  if (sec.empty() || non.empty()) {
    throw InvalidArgument("training set needs samples of both classes");
  }
  for (const auto* set : {&train_set, &validation}) {
    for (const auto& s : *set) check_sample_dims(s, hp.dim);
  }

  TrainResult result;
  result.state = resume ? std::move(*resume) : init_train_state(hp, options);
  TrainState& state = result.state;
  state.hp = hp;
  state.options = options;
  state.options.checkpoint_dir.reset();

  std::vector<int> val_labels;
  for (const auto& s : validation) val_labels.push_back(label_value(s.label));

  BalancedBatchSampler sampler(sec, non,
                               static_cast<std::size_t>(hp.batch_size_train));
  std::optional<EpochRecord> best;
  Model grads = state.model.zeros_like();
  std::vector<const EncodedSample*> batch;

  for (int epoch = state.epoch + 1; epoch <= hp.epochs; ++epoch) {
    Rng batching = substream(hp.seed, "batching", epoch);
    Rng dropout = substream(hp.seed, "dropout", epoch);
    Rng mining = substream(hp.seed, "mining", epoch);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.seed = hp.seed;
    const auto batches = sampler.epoch(batching);
    for (const auto& indices : batches) {
      batch.clear();
      for (std::size_t i : indices) batch.push_back(&train_set[i]);
      auto diverged = [&] {
        return DivergenceDetected(
            epoch, result.last_checkpoint ? result.last_checkpoint->string() : "");
      };
      BatchLoss bl;
      try {
        bl = batch_loss(batch, state.model, hp, options, true, &dropout, mining,
                        &grads);
      } catch (const InvalidArgument&) {
        // Shapes were checked up front, so this is a non-finite activation.
        throw diverged();
      }
      if (!std::isfinite(bl.total)) throw diverged();
      adamw_step(state.model, grads, state.m, state.v, state.step,
                 hp.learning_rate, hp.weight_decay, options.optimizer);
      rec.l_bce += bl.bce;
      rec.l_sbcl += bl.sbcl;
      rec.l += bl.total;
      if (bl.sbcl_skipped) ++rec.sbcl_skipped_batches;
    }
    const double nb = static_cast<double>(batches.size());
    rec.l_bce /= nb;
    rec.l_sbcl /= nb;
    rec.l /= nb;
    state.epoch = epoch;

    if (!validation.empty()) {
      std::vector<Prediction> preds;
      try {
        preds = predict(validation, state, options.threshold);
      } catch (const InvalidArgument&) {
        throw DivergenceDetected(
            epoch, result.last_checkpoint ? result.last_checkpoint->string() : "");
      }
      std::vector<double> probs;
      for (const auto& p : preds) probs.push_back(p.probability);
      MetricsReport report = compute_metrics(probs, val_labels, options.threshold);
      rec.val_auc = report.auc;
      rec.val_f1 = report.f1;
    }

    if (options.checkpoint_dir) {
      auto path = epoch_checkpoint_path(*options.checkpoint_dir, epoch);
      save_checkpoint(state, path);
      result.last_checkpoint = path;
      if (!best || better(rec, *best)) {
        best = rec;
        result.best_checkpoint = path;
        write_best_pointer(*options.checkpoint_dir, rec, path);
      }
    }
    result.log.push_back(rec);
  }
  return result;
}

TrainResult train(const DatasetSplit& split, const HyperParams& hp,
                  const Backends& backends, const TrainOptions& options,
                  std::optional<TrainState> resume) {
  hp.validate();
  if (!backends.embedder || backends.embedder->dim() != hp.dim) {
    throw InvalidArgument("embedder width does not match hyperparameter dim " +
                          std::to_string(hp.dim));
  }
  const auto max_tokens = static_cast<std::size_t>(hp.max_tokens);
  auto train_set = encode_samples(split.train, backends, max_tokens, options.ablation);
  auto validation =
      encode_samples(split.validation, backends, max_tokens, options.ablation);
  return train(train_set, validation, hp, options, std::move(resume));
}

std::vector<Prediction> predict(const std::vector<EncodedSample>& samples,
                                const TrainState& state, double threshold) {
  std::vector<Prediction> out;
  out.reserve(samples.size());
  const std::size_t chunk =
      static_cast<std::size_t>(std::max(1, state.hp.batch_size_eval));
  for (std::size_t begin = 0; begin < samples.size(); begin += chunk) {
    const std::size_t end = std::min(samples.size(), begin + chunk);
    for (std::size_t i = begin; i < end; ++i) {
      FusedEmbedding e =
          fuse_sample(samples[i], state.model, state.options.ablation, false);
      double p = predict_probability(e, state.model.classifier);
      out.push_back({samples[i].id, p,
                     p >= threshold ? Label::kSecurity : Label::kNonSecurity});
    }
  }
  return out;
}

std::vector<Prediction> predict(const std::vector<PatchSample>& samples,
                                const TrainState& state,
                                const Backends& backends, double threshold) {
  auto encoded = encode_samples(samples, backends,
                                static_cast<std::size_t>(state.hp.max_tokens),
                                state.options.ablation);
  return predict(encoded, state, threshold);
}

std::vector<FusedEmbedding> fused_embeddings(
    const std::vector<EncodedSample>& samples, const TrainState& state) {
  std::vector<FusedEmbedding> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    out.push_back(fuse_sample(s, state.model, state.options.ablation, false));
  }
  return out;
}

}  // namespace llmda
