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

#include "llmda/pt_former.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "llmda/binary_io.hpp"
#include "llmda/error.hpp"

namespace llmda {

using Eigen::MatrixXd;
using Eigen::VectorXd;

PTFormerState PTFormerState::zeros_like() const {
  PTFormerState z = *this;
  z.for_each_param([](const std::string&, MatrixXd& m) { m.setZero(); });
  return z;
}

std::size_t PTFormerState::parameter_count() const {
  std::size_t n = 0;
  for_each_param([&](const std::string&, const MatrixXd& m) {
    n += static_cast<std::size_t>(m.size());
  });
  return n;
}

PTFormerState init_pt_former(const HyperParams& hp, std::uint64_t rng_seed,
                             int ff_hidden) {
  hp.validate();
  const int dim = hp.dim;
  const int heads = hp.num_heads;
  const int dh = dim / heads;
  const int hidden = ff_hidden > 0 ? ff_hidden : dim;
  Rng rng = substream(rng_seed, "init");
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian = [&](int r, int c) {
    MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j) {
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal(rng);
    }
    return m;
  };
  auto uniform = [&](int r, int c, int fan_in) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j) {
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = u(rng);
    }
    return m;
  };

  PTFormerState s;
  s.dropout_rate = hp.dropout;
  for (int i = 0; i < heads; ++i) {
    s.self_attn.wq.push_back(gaussian(dim, dh));
    s.self_attn.wk.push_back(gaussian(dim, dh));
    s.self_attn.wv.push_back(gaussian(dim, dh));
  }
  s.cross_attn.wq = gaussian(dim, dim);
  s.cross_attn.wk = gaussian(dim, dim);
  s.cross_attn.wv = gaussian(dim, dim);
  for (FeedForwardParams* ff : {&s.ff_pa_ex, &s.ff_desc, &s.ff_inst}) {
    ff->w1 = uniform(dim, hidden, dim);
    ff->b1 = uniform(1, hidden, dim);
    ff->w2 = uniform(hidden, dim, hidden);
    ff->b2 = uniform(1, dim, hidden);
  }
  return s;
}

MatrixXd softmax_rows(const MatrixXd& scores) {
  MatrixXd out(scores.rows(), scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    double mx = scores.row(i).maxCoeff();
    out.row(i) = (scores.row(i).array() - mx).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

namespace {

double attention_scale(Eigen::Index dim) {
  return 1.0 / std::sqrt(static_cast<double>(dim));
}

// dS from dA for A = softmax_rows(S).
MatrixXd softmax_backward(const MatrixXd& a, const MatrixXd& da) {
  VectorXd dot = (da.cwiseProduct(a)).rowwise().sum();
  MatrixXd centered = da;
  centered.colwise() -= dot;
  return a.cwiseProduct(centered);
}

MatrixXd self_attention_forward(const MatrixXd& e, const AttentionParams& p,
                                FuseTrace::SelfAttn* trace) {
  const Eigen::Index dim = e.cols();
  const int heads = p.num_heads();
  const Eigen::Index dh = dim / heads;
  const double scale = attention_scale(dim);
  MatrixXd out(e.rows(), dim);
  if (trace) trace->heads.resize(heads);
  for (int i = 0; i < heads; ++i) {
    MatrixXd q = e * p.wq[i];
    MatrixXd k = e * p.wk[i];
    MatrixXd v = e * p.wv[i];
    MatrixXd a = softmax_rows((q * k.transpose()) * scale);
    out.middleCols(i * dh, dh) = a * v;
    if (trace) trace->heads[i] = {std::move(q), std::move(k), std::move(v),
                                  std::move(a)};
  }
  if (trace) trace->out = out;
  return out;
}

// Input rows are frozen encoder outputs, so only parameter gradients are
// produced.
void self_attention_backward(const MatrixXd& e, const AttentionParams& p,
                             const FuseTrace::SelfAttn& trace,
                             const MatrixXd& dout, AttentionParams& g) {
  const Eigen::Index dim = e.cols();
  const int heads = p.num_heads();
  const Eigen::Index dh = dim / heads;
  const double scale = attention_scale(dim);
  for (int i = 0; i < heads; ++i) {
    const auto& h = trace.heads[i];
    MatrixXd dh_out = dout.middleCols(i * dh, dh);
    MatrixXd da = dh_out * h.v.transpose();
    MatrixXd dv = h.a.transpose() * dh_out;
    MatrixXd ds = softmax_backward(h.a, da);
    MatrixXd dq = (ds * h.k) * scale;
    MatrixXd dk = (ds.transpose() * h.q) * scale;
    g.wq[i].noalias() += e.transpose() * dq;
    g.wk[i].noalias() += e.transpose() * dk;
    g.wv[i].noalias() += e.transpose() * dv;
  }
}

MatrixXd cross_attention_forward(const MatrixXd& e_pa, const MatrixXd& e_ex,
                                 const CrossAttentionParams& p,
                                 FuseTrace::Head* trace) {
  const double scale = attention_scale(e_pa.cols());
  MatrixXd q = e_pa * p.wq;
  MatrixXd k = e_ex * p.wk;
  MatrixXd v = e_ex * p.wv;
  MatrixXd a = softmax_rows((q * k.transpose()) * scale);
  MatrixXd out = a * v;
  if (trace) *trace = {std::move(q), std::move(k), std::move(v), std::move(a)};
  return out;
}

// Returns d(loss)/d(e_ex).
MatrixXd cross_attention_backward(const MatrixXd& e_pa, const MatrixXd& e_ex,
                                  const CrossAttentionParams& p,
                                  const FuseTrace::Head& h,
                                  const MatrixXd& dout,
                                  CrossAttentionParams& g) {
  const double scale = attention_scale(e_pa.cols());
  MatrixXd da = dout * h.v.transpose();
  MatrixXd dv = h.a.transpose() * dout;
  MatrixXd ds = softmax_backward(h.a, da);
  MatrixXd dq = (ds * h.k) * scale;
  MatrixXd dk = (ds.transpose() * h.q) * scale;
  g.wq.noalias() += e_pa.transpose() * dq;
  g.wk.noalias() += e_ex.transpose() * dk;
  g.wv.noalias() += e_ex.transpose() * dv;
  return dk * p.wk.transpose() + dv * p.wv.transpose();
}

MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate,
                      Rng& rng) {
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = keep(rng) ? scale : 0.0;
  }
  return m;
}

MatrixXd feed_forward_forward(const MatrixXd& x, const FeedForwardParams& p,
                              bool training, double rate, Rng* rng,
                              FuseTrace::FeedForward* trace) {
  MatrixXd z1 = x * p.w1;
  z1.rowwise() += p.b1.row(0);
  MatrixXd hidden = z1.cwiseMax(0.0);
  MatrixXd mask;
  if (training && rate > 0.0) {
    if (!rng) throw InvalidArgument("dropout requires a random stream");
    mask = dropout_mask(hidden.rows(), hidden.cols(), rate, *rng);
    hidden = hidden.cwiseProduct(mask);
  }
  MatrixXd y = hidden * p.w2;
  y.rowwise() += p.b2.row(0);
  if (trace) {
    trace->x = x;
    trace->z1 = std::move(z1);
    trace->mask = std::move(mask);
    trace->hidden = std::move(hidden);
    trace->y = y;
  }
  return y;
}

// Returns d(loss)/d(x).
MatrixXd feed_forward_backward(const FuseTrace::FeedForward& t,
                               const FeedForwardParams& p, const MatrixXd& dy,
                               FeedForwardParams& g) {
  g.w2.noalias() += t.hidden.transpose() * dy;
  g.b2 += dy.colwise().sum();
  MatrixXd dz = dy * p.w2.transpose();
  if (t.mask.size() > 0) dz = dz.cwiseProduct(t.mask);
  dz = dz.cwiseProduct((t.z1.array() > 0.0).cast<double>().matrix());
  g.w1.noalias() += t.x.transpose() * dz;
  g.b1 += dz.colwise().sum();
  return dz * p.w1.transpose();
}

void check_dims(const FuseInputs& in, Eigen::Index dim) {
  for (const EmbeddingMatrix* m :
       {&in.patch, &in.explanation, &in.description, &in.instruction}) {
    if (m->dim() != dim) {
      throw InvalidArgument("fusion input has dim " + std::to_string(m->dim()) +
                            ", expected " + std::to_string(dim));
    }
    if (m->seq_len() < 1) throw InvalidArgument("fusion input has no rows");
  }
}

}  // namespace

std::vector<MatrixXd> self_attention_weights(const MatrixXd& e,
                                             const AttentionParams& params) {
  FuseTrace::SelfAttn trace;
  self_attention_forward(e, params, &trace);
  std::vector<MatrixXd> out;
  for (auto& h : trace.heads) out.push_back(std::move(h.a));
  return out;
}

EmbeddingMatrix self_attention(const EmbeddingMatrix& e,
                               const AttentionParams& params) {
  if (params.num_heads() < 1 || e.dim() % params.num_heads() != 0) {
    throw InvalidArgument("self-attention heads do not divide dim");
  }
  return EmbeddingMatrix(self_attention_forward(e.values(), params, nullptr),
                         e.modality());
}

MatrixXd cross_attention_weights(const MatrixXd& e_pa, const MatrixXd& e_ex,
                                 const CrossAttentionParams& params) {
  FuseTrace::Head trace;
  cross_attention_forward(e_pa, e_ex, params, &trace);
  return trace.a;
}

EmbeddingMatrix cross_attention(const EmbeddingMatrix& e_pa,
                                const EmbeddingMatrix& e_ex,
                                const CrossAttentionParams& params) {
  if (e_pa.dim() != e_ex.dim()) {
    throw InvalidArgument("cross-attention inputs differ in dim");
  }
  return EmbeddingMatrix(
      cross_attention_forward(e_pa.values(), e_ex.values(), params, nullptr),
      Modality::kPatch);
}

MatrixXd feed_forward(const MatrixXd& x, const FeedForwardParams& params,
                      const MatrixXd& mask) {
  MatrixXd z1 = x * params.w1;
  z1.rowwise() += params.b1.row(0);
  MatrixXd hidden = z1.cwiseMax(0.0);
  if (mask.size() > 0) hidden = hidden.cwiseProduct(mask);
  MatrixXd y = hidden * params.w2;
  y.rowwise() += params.b2.row(0);
  return y;
}

FusedEmbedding fuse(const FuseInputs& in, const PTFormerState& state,
                    bool training, Rng* dropout_rng, FuseTrace* trace,
                    std::string sample_id) {
  const Eigen::Index dim = state.dim();
  check_dims(in, dim);
  FuseTrace local;
  FuseTrace& t = trace ? *trace : local;
  t.e_pa = in.patch.values();
  t.e_ex = in.explanation.values();
  t.e_desc = in.description.values();
  t.e_inst = in.instruction.values();

  self_attention_forward(t.e_ex, state.self_attn, &t.sa_ex);
  self_attention_forward(t.e_desc, state.self_attn, &t.sa_desc);
  self_attention_forward(t.e_inst, state.self_attn, &t.sa_inst);
  t.ca_out = cross_attention_forward(t.e_pa, t.sa_ex.out, state.cross_attn,
                                     &t.ca);

  const double rate = state.dropout_rate;
  feed_forward_forward(t.ca_out, state.ff_pa_ex, training, rate, dropout_rng,
                       &t.ff_pa_ex);
  feed_forward_forward(t.sa_desc.out, state.ff_desc, training, rate,
                       dropout_rng, &t.ff_desc);
  feed_forward_forward(t.sa_inst.out, state.ff_inst, training, rate,
                       dropout_rng, &t.ff_inst);

  VectorXd fused(3 * dim);
  fused.segment(0, dim) = t.ff_pa_ex.y.colwise().mean().transpose();
  fused.segment(dim, dim) = t.ff_desc.y.colwise().mean().transpose();
  fused.segment(2 * dim, dim) = t.ff_inst.y.colwise().mean().transpose();
  return FusedEmbedding(std::move(fused), std::move(sample_id));
}

void fuse_backward(const FuseTrace& t, const PTFormerState& state,
                   const VectorXd& upstream, PTFormerState& grads) {
  const Eigen::Index dim = state.dim();
  if (upstream.size() != 3 * dim) {
    throw LengthMismatch(static_cast<std::size_t>(upstream.size()),
                         static_cast<std::size_t>(3 * dim));
  }
  auto pooled_grad = [&](Eigen::Index rows, Eigen::Index segment) {
    MatrixXd dy = upstream.segment(segment * dim, dim).transpose().replicate(
                      rows, 1) /
                  static_cast<double>(rows);
    return dy;
  };

  MatrixXd d_ca = feed_forward_backward(
      t.ff_pa_ex, state.ff_pa_ex, pooled_grad(t.ff_pa_ex.y.rows(), 0),
      grads.ff_pa_ex);
  MatrixXd d_sa_desc = feed_forward_backward(
      t.ff_desc, state.ff_desc, pooled_grad(t.ff_desc.y.rows(), 1),
      grads.ff_desc);
  MatrixXd d_sa_inst = feed_forward_backward(
      t.ff_inst, state.ff_inst, pooled_grad(t.ff_inst.y.rows(), 2),
      grads.ff_inst);

  MatrixXd d_sa_ex = cross_attention_backward(
      t.e_pa, t.sa_ex.out, state.cross_attn, t.ca, d_ca, grads.cross_attn);

  self_attention_backward(t.e_ex, state.self_attn, t.sa_ex, d_sa_ex,
                          grads.self_attn);
  self_attention_backward(t.e_desc, state.self_attn, t.sa_desc, d_sa_desc,
                          grads.self_attn);
  self_attention_backward(t.e_inst, state.self_attn, t.sa_inst, d_sa_inst,
                          grads.self_attn);
}

PTFormerState pt_former_gradients(std::span<const FuseInputs> batch,
                                  const PTFormerState& state,
                                  std::span<const VectorXd> upstream,
                                  bool training, Rng* dropout_rng) {
  if (batch.size() != upstream.size()) {
    throw LengthMismatch(batch.size(), upstream.size());
  }
  PTFormerState grads = state.zeros_like();
  FuseTrace trace;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    fuse(batch[i], state, training, dropout_rng, &trace);
    fuse_backward(trace, state, upstream[i], grads);
  }
  return grads;
}

FusedEmbedding plain_pooled_concat(const FuseInputs& in,
                                   std::string sample_id) {
  const Eigen::Index dim = in.patch.dim();
  check_dims(in, dim);
  VectorXd fused(3 * dim);
  const auto& pa = in.patch.values();
  const auto& ex = in.explanation.values();
  fused.segment(0, dim) =
      ((pa.colwise().sum() + ex.colwise().sum()) /
       static_cast<double>(pa.rows() + ex.rows()))
          .transpose();
  fused.segment(dim, dim) = in.description.values().colwise().mean().transpose();
  fused.segment(2 * dim, dim) =
      in.instruction.values().colwise().mean().transpose();
  return FusedEmbedding(std::move(fused), std::move(sample_id));
}

void write_pt_former(const PTFormerState& state, std::ostream& out) {
  BinaryWriter w(out);
  w.magic(kPTFormerMagic);
  w.pod<std::uint32_t>(kPTFormerVersion);
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(state.dim()));
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(state.num_heads()));
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(state.ff_hidden()));
  w.pod<double>(state.dropout_rate);
  std::uint32_t count = 0;
  state.for_each_param([&](const std::string&, const MatrixXd&) { ++count; });
  w.pod<std::uint32_t>(count);
  state.for_each_param([&](const std::string& name, const MatrixXd& m) {
    w.string(name);
    w.matrix(m);
  });
  if (!w.ok()) throw IoError("failed to write PT-Former parameters");
}

PTFormerState read_pt_former(std::istream& in) {
  BinaryReader r(in);
  r.expect_magic(kPTFormerMagic);
  auto version = r.pod<std::uint32_t>();
  if (version != kPTFormerVersion) {
    throw FormatError("unsupported PT-Former checkpoint version " +
                      std::to_string(version));
  }
  auto dim = static_cast<int>(r.pod<std::uint32_t>());
  auto heads = static_cast<int>(r.pod<std::uint32_t>());
  auto hidden = static_cast<int>(r.pod<std::uint32_t>());
  double dropout = r.pod<double>();
  if (dim < 1 || heads < 1 || dim % heads != 0 || hidden < 1) {
    throw FormatError("inconsistent PT-Former header");
  }
  PTFormerState s;
  s.dropout_rate = dropout;
  const int dh = dim / heads;
  s.self_attn.wq.assign(heads, MatrixXd::Zero(dim, dh));
  s.self_attn.wk.assign(heads, MatrixXd::Zero(dim, dh));
  s.self_attn.wv.assign(heads, MatrixXd::Zero(dim, dh));
  s.cross_attn = {MatrixXd::Zero(dim, dim), MatrixXd::Zero(dim, dim),
                  MatrixXd::Zero(dim, dim)};
  for (FeedForwardParams* ff : {&s.ff_pa_ex, &s.ff_desc, &s.ff_inst}) {
    *ff = {MatrixXd::Zero(dim, hidden), MatrixXd::Zero(1, hidden),
           MatrixXd::Zero(hidden, dim), MatrixXd::Zero(1, dim)};
  }
  auto count = r.pod<std::uint32_t>();
  std::uint32_t expected = 0;
  s.for_each_param([&](const std::string&, MatrixXd&) { ++expected; });
  if (count != expected) throw FormatError("unexpected parameter count");
  s.for_each_param([&](const std::string& name, MatrixXd& m) {
    if (r.string() != name) throw FormatError("parameter order mismatch at " + name);
    MatrixXd v = r.matrix();
    if (v.rows() != m.rows() || v.cols() != m.cols()) {
      throw FormatError("shape mismatch for " + name);
    }
    m = std::move(v);
  });
  return s;
}

void save_pt_former(const PTFormerState& state,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_pt_former(state, out);
}

PTFormerState load_pt_former(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_pt_former(in);
}

}  // namespace llmda
