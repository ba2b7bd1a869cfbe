// Copyright 2026 The rcnp authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rcnp/models.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "rcnp/gp.hpp"
#include "rcnp/linalg.hpp"
#include "rcnp/parallel.hpp"
#include "rcnp/rng.hpp"

namespace rcnp::models {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kStdFloor = 1e-3;
}  // namespace

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kCNP:
      return "cnp";
    case Variant::kGNP:
      return "gnp";
    case Variant::kRCNP:
      return "rcnp";
    case Variant::kRGNP:
      return "rgnp";
    case Variant::kFullRCNP:
      return "fullrcnp";
    case Variant::kFullRGNP:
      return "fullrgnp";
  }
  return "?";
}

const char* head_name(Head h) {
  switch (h) {
    case Head::kMeanField:
      return "meanfield";
    case Head::kLowRankLinear:
      return "linear";
    case Head::kLowRankKvv:
      return "kvv";
  }
  return "?";
}

bool parse_variant(const std::string& s, Variant& out) {
  for (Variant v : {Variant::kCNP, Variant::kGNP, Variant::kRCNP, Variant::kRGNP,
                    Variant::kFullRCNP, Variant::kFullRGNP}) {
    if (s == variant_name(v)) {
      out = v;
      return true;
    }
  }
  return false;
}

bool parse_head(const std::string& s, Head& out) {
  for (Head h : {Head::kMeanField, Head::kLowRankLinear, Head::kLowRankKvv}) {
    if (s == head_name(h)) {
      out = h;
      return true;
    }
  }
  return false;
}

std::size_t ModelSpec::encoder_input_dim() const {
  const std::size_t dc = encoding::comparison_dim(comparison, d_x);
  if (!is_relational()) return d_x + d_y;
  if (is_full()) return 2 * dc + 2 * d_y;
  return dc + d_y;
}

std::size_t ModelSpec::decoder_input_dim() const {
  return is_relational() ? embed_dim : embed_dim + d_x;
}

std::size_t ModelSpec::decoder_output_dim() const {
  switch (head) {
    case Head::kMeanField:
      return 2 * d_y;
    case Head::kLowRankLinear:
      return 2 + d_sigma;
    case Head::kLowRankKvv:
      return 3 + d_sigma;
  }
  return 0;
}

void ModelSpec::validate() const {
  if (d_x < 1) throw std::invalid_argument("ModelSpec: d_x must be >= 1");
  if (d_y != 1) throw std::invalid_argument("ModelSpec: only scalar outputs (d_y = 1) supported");
  const bool low_rank = head != Head::kMeanField;
  if (is_gaussian() != low_rank) {
    throw std::invalid_argument(std::string("ModelSpec: ") + variant_name(variant) +
                                " is incompatible with head '" + head_name(head) + "'");
  }
  if (low_rank && d_sigma < 1) {
    throw std::invalid_argument("ModelSpec: low-rank head needs d_sigma >= 1");
  }
  if (embed_dim < 1 || enc_width < 1 || dec_width < 1) {
    throw std::invalid_argument("ModelSpec: widths must be >= 1");
  }
}

namespace {

struct LayerDims {
  std::size_t in, out;
};

// Linear layer sizes for the encoder followed by the decoder. Hidden-layer
// counts are enc_depth/dec_depth; one output layer each on top.
std::vector<LayerDims> layer_plan(const ModelSpec& spec, std::size_t& n_enc_layers) {
  std::vector<LayerDims> dims;
  n_enc_layers = spec.enc_depth + 1;
  for (std::size_t l = 0; l <= spec.enc_depth; ++l) {
    dims.push_back({l == 0 ? spec.encoder_input_dim() : spec.enc_width,
                    l == spec.enc_depth ? spec.embed_dim : spec.enc_width});
  }
  for (std::size_t l = 0; l <= spec.dec_depth; ++l) {
    dims.push_back({l == 0 ? spec.decoder_input_dim() : spec.dec_width,
                    l == spec.dec_depth ? spec.decoder_output_dim() : spec.dec_width});
  }
  return dims;
}

}  // namespace

std::size_t ModelParams::total_size() const {
  std::size_t n = 0;
  for (const Tensor& t : tensors) n += t.size();
  return n;
}

Tensor ModelParams::flatten() const {
  Tensor flat({total_size()});
  std::size_t off = 0;
  for (const Tensor& t : tensors) {
    for (std::size_t i = 0; i < t.size(); ++i) flat[off + i] = t[i];
    off += t.size();
  }
  return flat;
}

void ModelParams::unflatten(const Tensor& flat) {
  if (flat.size() != total_size()) {
    throw std::invalid_argument("ModelParams::unflatten: size mismatch");
  }
  std::size_t off = 0;
  for (Tensor& t : tensors) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = flat[off + i];
    off += t.size();
  }
}

const Tensor& ModelParams::find(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return tensors[i];
  }
  throw std::invalid_argument("ModelParams: no parameter named " + name);
}

ModelParams init(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  std::size_t n_enc_layers = 0;
  const auto dims = layer_plan(spec, n_enc_layers);
  ModelParams p;
  for (std::size_t l = 0; l < dims.size(); ++l) {
    const bool enc = l < n_enc_layers;
    const std::size_t idx = enc ? l : l - n_enc_layers;
    const std::string prefix = enc ? "enc." : "dec.";
    Tensor w({dims[l].in, dims[l].out});
    const double bound = std::sqrt(6.0 / static_cast<double>(dims[l].in));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-bound, bound);
    p.names.push_back(prefix + "w" + std::to_string(idx));
    p.tensors.push_back(std::move(w));
    p.names.push_back(prefix + "b" + std::to_string(idx));
    p.tensors.push_back(Tensor({dims[l].out}));
  }
  return p;
}

namespace {

struct TapeModel {
  std::vector<Val> params;
  std::size_t n_enc_layers = 0;
  std::size_t n_layers = 0;
};

TapeModel bind(Tape& tape, const ModelSpec& spec, const ModelParams& params, bool trainable) {
  TapeModel m;
  std::size_t n_enc = 0;
  m.n_layers = layer_plan(spec, n_enc).size();
  m.n_enc_layers = n_enc;
  if (params.tensors.size() != 2 * m.n_layers) {
    throw std::invalid_argument("forward: parameter count does not match spec");
  }
  m.params.reserve(params.tensors.size());
  for (const Tensor& t : params.tensors) {
    m.params.push_back(trainable ? tape.param(t) : tape.constant(t));
  }
  return m;
}

Val apply_mlp(Tape& tape, const TapeModel& m, bool decoder, Val x, const char* label) {
  const std::size_t first = decoder ? m.n_enc_layers : 0;
  const std::size_t count = decoder ? m.n_layers - m.n_enc_layers : m.n_enc_layers;
  for (std::size_t l = 0; l < count; ++l) {
    Val w = m.params[2 * (first + l)];
    Val b = m.params[2 * (first + l) + 1];
    x = tape.add_rowvec(tape.matmul(x, w), b);
    if (l + 1 < count) x = tape.relu(x);
    if (!tape.value(x).all_finite()) {
      throw std::runtime_error(std::string("forward: non-finite activation in ") + label +
                               " layer " + std::to_string(l));
    }
  }
  return x;
}

struct TapePredictive {
  bool mean_field = true;
  bool kvv = false;
  // mean-field
  Val means, stds;  // [M x d_y]
  // low-rank
  Val mean_col, noise_col;  // [M x 1]
  Val factors;              // [M x d_sigma]
  Val scales_col;           // [M x 1], kvv only
};

TapePredictive build_forward(Tape& tape, const ModelSpec& spec, const TapeModel& m,
                             const tasks::Task& task) {
  if (task.d_x() != spec.d_x || task.context_y.dim(1) != spec.d_y) {
    throw std::invalid_argument("forward: task dimensions do not match spec");
  }
  if (task.n_context() == 0) {
    throw std::invalid_argument("forward: empty context set is unsupported");
  }
  const std::size_t m_targets = task.n_target();
  encoding::BatchNet enc_net = [&](Tape& t, Val in) {
    return apply_mlp(t, m, /*decoder=*/false, in, "encoder");
  };

  Val rep;
  if (spec.is_relational()) {
    rep = spec.is_full()
              ? encoding::rho_full_all(tape, spec.comparison, enc_net, task.context_x,
                                       task.context_y, task.target_x, spec.mean_aggregation)
              : encoding::rho_diag_all(tape, spec.comparison, enc_net, task.context_x,
                                       task.context_y, task.target_x, spec.mean_aggregation);
  } else {
    Val e = encoding::deepset_encode(tape, enc_net, task.context_x, task.context_y,
                                     spec.mean_aggregation);
    rep = tape.concat_cols({tape.tile_rows(e, m_targets), tape.constant(task.target_x)});
  }

  Val out = apply_mlp(tape, m, /*decoder=*/true, rep, "decoder");

  TapePredictive pred;
  if (spec.head == Head::kMeanField) {
    pred.mean_field = true;
    pred.means = tape.slice_cols(out, 0, spec.d_y);
    pred.stds =
        tape.add_scalar(tape.softplus(tape.slice_cols(out, spec.d_y, 2 * spec.d_y)), kStdFloor);
  } else {
    pred.mean_field = false;
    pred.kvv = spec.head == Head::kLowRankKvv;
    pred.mean_col = tape.slice_cols(out, 0, 1);
    pred.noise_col = tape.add_scalar(tape.softplus(tape.slice_cols(out, 1, 2)), kStdFloor);
    pred.factors = tape.slice_cols(out, 2, 2 + spec.d_sigma);
    if (pred.kvv) {
      pred.scales_col = tape.softplus(tape.slice_cols(out, 2 + spec.d_sigma, 3 + spec.d_sigma));
    }
  }
  return pred;
}

// Dense covariance of a low-rank predictive on the tape, without noise.
Val covariance_on_tape(Tape& tape, const TapePredictive& pred) {
  Val G = tape.matmul(pred.factors, tape.transpose(pred.factors));
  if (!pred.kvv) return G;
  // kvv: exp(-1/2 ||f_m - f_m'||^2) v_m v_m'
  Val r = tape.reduce_sum(tape.mul(pred.factors, pred.factors), 1);  // [M]
  Val sq = tape.add_colvec(tape.add_rowvec(tape.scale(G, -2.0), r), r);
  Val K = tape.exp(tape.scale(sq, -0.5));
  Val vv = tape.matmul(pred.scales_col, tape.transpose(pred.scales_col));
  return tape.mul(K, vv);
}

// Joint log-likelihood of the task's target outputs, on the tape.
Val loglik_on_tape(Tape& tape, const TapePredictive& pred, const Tensor& target_y) {
  const std::size_t m = target_y.dim(0);
  if (pred.mean_field) {
    Val y = tape.constant(target_y);
    Val z = tape.div(tape.sub(y, pred.means), pred.stds);
    Val quad = tape.reduce_sum_all(tape.mul(z, z));
    Val logs = tape.reduce_sum_all(tape.log(pred.stds));
    const double c = -0.5 * static_cast<double>(target_y.size()) * kLog2Pi;
    return tape.add_scalar(tape.sub(tape.scale(quad, -0.5), logs), c);
  }
  Val cov = covariance_on_tape(tape, pred);
  Val noise_sq = tape.reshape(tape.mul(pred.noise_col, pred.noise_col), {m});
  Val cov_n = tape.add_diag(cov, noise_sq);
  Val L = tape.cholesky(cov_n, 0.0);
  Val d = tape.sub(tape.constant(target_y), pred.mean_col);
  Val z = tape.tri_solve(L, d, false);
  Val quad = tape.reduce_sum_all(tape.mul(z, z));
  Val logdet = tape.scale(tape.reduce_sum_all(tape.log(tape.diag_part(L))), 2.0);
  const double c = static_cast<double>(m) * kLog2Pi;
  return tape.scale(tape.add_scalar(tape.add(quad, logdet), c), -0.5);
}

}  // namespace

Predictive forward(const ModelSpec& spec, const ModelParams& params, const tasks::Task& task) {
  spec.validate();
  Tape tape;
  const TapeModel m = bind(tape, spec, params, /*trainable=*/false);
  const TapePredictive tp = build_forward(tape, spec, m, task);
  Predictive pred;
  pred.mean_field = tp.mean_field;
  if (tp.mean_field) {
    pred.means = tape.value(tp.means);
    pred.stds = tape.value(tp.stds);
    return pred;
  }
  pred.kvv = tp.kvv;
  const std::size_t mt = task.n_target();
  const Tensor& mc = tape.value(tp.mean_col);
  const Tensor& nc = tape.value(tp.noise_col);
  pred.mean = Tensor({mt}, std::vector<double>(mc.data(), mc.data() + mt));
  pred.noise_std = Tensor({mt}, std::vector<double>(nc.data(), nc.data() + mt));
  pred.factors = tape.value(tp.factors);
  if (tp.kvv) {
    const Tensor& sc = tape.value(tp.scales_col);
    pred.scales = Tensor({mt}, std::vector<double>(sc.data(), sc.data() + mt));
  } else {
    pred.scales = Tensor::full({mt}, 1.0);
  }
  return pred;
}

Tensor Predictive::covariance() const {
  if (mean_field) throw std::logic_error("Predictive::covariance: mean-field head");
  const std::size_t m = mean.dim(0), k = factors.dim(1);
  Tensor cov({m, m});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double dot = 0.0, sq = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        dot += factors.at(i, c) * factors.at(j, c);
        const double diff = factors.at(i, c) - factors.at(j, c);
        sq += diff * diff;
      }
      const double v = kvv ? std::exp(-0.5 * sq) * scales[i] * scales[j] : dot;
      cov.at(i, j) = v;
      cov.at(j, i) = v;
    }
  }
  return cov;
}

Tensor Predictive::noisy_covariance() const {
  Tensor cov = covariance();
  for (std::size_t i = 0; i < cov.dim(0); ++i) cov.at(i, i) += noise_std[i] * noise_std[i];
  return cov;
}

void Predictive::marginals(Tensor& mean_out, Tensor& std_out) const {
  if (mean_field) {
    const std::size_t m = means.dim(0);
    mean_out = Tensor({m});
    std_out = Tensor({m});
    for (std::size_t i = 0; i < m; ++i) {
      mean_out[i] = means.at(i, 0);
      std_out[i] = stds.at(i, 0);
    }
    return;
  }
  const std::size_t m = mean.dim(0), k = factors.dim(1);
  mean_out = mean;
  std_out = Tensor({m});
  for (std::size_t i = 0; i < m; ++i) {
    double var = noise_std[i] * noise_std[i];
    if (kvv) {
      var += scales[i] * scales[i];
    } else {
      for (std::size_t c = 0; c < k; ++c) var += factors.at(i, c) * factors.at(i, c);
    }
    std_out[i] = std::sqrt(var);
  }
}

double loglik(const Predictive& pred, const Tensor& target_y) {
  if (pred.mean_field) {
    if (target_y.size() != pred.means.size()) {
      throw std::invalid_argument("loglik: target shape " + target_y.shape_str() +
                                  " != predictive " + pred.means.shape_str());
    }
    double ll = 0.0;
    for (std::size_t i = 0; i < target_y.size(); ++i) {
      const double z = (target_y[i] - pred.means[i]) / pred.stds[i];
      ll += -0.5 * z * z - std::log(pred.stds[i]) - 0.5 * kLog2Pi;
    }
    return ll;
  }
  if (target_y.size() != pred.mean.size()) {
    throw std::invalid_argument("loglik: target shape " + target_y.shape_str() +
                                " != predictive mean [" + std::to_string(pred.mean.size()) + "]");
  }
  Tensor y({pred.mean.size()},
           std::vector<double>(target_y.data(), target_y.data() + target_y.size()));
  return gp::mvn_logpdf(y, pred.mean, pred.noisy_covariance());
}

Objective nll_objective(const ModelSpec& spec, const ModelParams& params,
                        const std::vector<tasks::Task>& batch, bool with_grads,
                        bool normalize_by_targets) {
  spec.validate();
  if (batch.empty()) throw std::invalid_argument("nll_objective: empty batch");
  const std::size_t b = batch.size();
  std::vector<double> losses(b, 0.0);
  std::vector<std::vector<Tensor>> grads(b);

  parallel_for(b, [&](std::size_t i) {
    Tape tape;
    const TapeModel m = bind(tape, spec, params, with_grads);
    const TapePredictive pred = build_forward(tape, spec, m, batch[i]);
    Val ll = loglik_on_tape(tape, pred, batch[i].target_y);
    const double norm = normalize_by_targets ? static_cast<double>(batch[i].n_target()) : 1.0;
    Val loss = tape.scale(ll, -1.0 / norm);
    losses[i] = tape.value(loss)[0];
    if (with_grads) {
      tape.backward(loss);
      grads[i].reserve(m.params.size());
      for (Val p : m.params) grads[i].push_back(tape.grad(p));
    }
  });

  Objective obj;
  for (double l : losses) obj.loss += l;
  obj.loss /= static_cast<double>(b);
  if (with_grads) {
    obj.grads = std::move(grads[0]);
    for (std::size_t i = 1; i < b; ++i) {
      for (std::size_t j = 0; j < obj.grads.size(); ++j) {
        Tensor& acc = obj.grads[j];
        const Tensor& g = grads[i][j];
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += g[k];
      }
    }
    for (Tensor& g : obj.grads) {
      for (std::size_t k = 0; k < g.size(); ++k) g[k] /= static_cast<double>(b);
    }
  }
  return obj;
}

FdSafety fd_safety(const ModelSpec& spec, const ModelParams& params, const tasks::Task& task) {
  Tape tape;
  const TapeModel m = bind(tape, spec, params, /*trainable=*/false);
  const TapePredictive pred = build_forward(tape, spec, m, task);
  (void)loglik_on_tape(tape, pred, task.target_y);
  FdSafety s;
  s.relu_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < tape.size(); ++i) {
    if (tape.op_at(i) != Tape::Op::kRelu) continue;
    const Tensor& in = tape.value_at(tape.inputs_at(i)[0]);
    for (std::size_t j = 0; j < in.size(); ++j)
      s.relu_margin = std::min(s.relu_margin, std::abs(in[j]));
  }
  const Tensor& stds = pred.mean_field ? tape.value(pred.stds) : tape.value(pred.noise_col);
  s.min_std = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < stds.size(); ++j) s.min_std = std::min(s.min_std, stds[j]);
  return s;
}

}  // namespace rcnp::models
