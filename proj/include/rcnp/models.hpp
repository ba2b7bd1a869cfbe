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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rcnp/encoders.hpp"
#include "rcnp/tape.hpp"
#include "rcnp/tasks.hpp"
#include "rcnp/tensor.hpp"

namespace rcnp::models {

enum class Variant { kCNP, kGNP, kRCNP, kRGNP, kFullRCNP, kFullRGNP };
enum class Head { kMeanField, kLowRankLinear, kLowRankKvv };

/// Architecture description for any family member. The conditional
/// variants (CNP, RCNP, FullRCNP) predict mean-field Gaussians; the
/// Gaussian variants (GNP, RGNP, FullRGNP) predict a joint low-rank
/// multivariate Gaussian over the targets.
struct ModelSpec {
  Variant variant = Variant::kRCNP;
  encoding::Comparison comparison = encoding::Comparison::kDifference;
  Head head = Head::kMeanField;
  std::size_t d_x = 1;
  std::size_t d_y = 1;
  std::size_t embed_dim = 128;  // context embedding / relational encoding width
  std::size_t enc_depth = 3;    // hidden layers in the encoder MLP
  std::size_t enc_width = 128;
  std::size_t dec_depth = 6;    // hidden layers in the decoder MLP
  std::size_t dec_width = 128;
  std::size_t d_sigma = 16;     // covariance basis count (low-rank heads)
  bool mean_aggregation = false;  // ablation: mean instead of sum in encoders

  bool is_relational() const {
    return variant == Variant::kRCNP || variant == Variant::kRGNP ||
           variant == Variant::kFullRCNP || variant == Variant::kFullRGNP;
  }
  bool is_full() const {
    return variant == Variant::kFullRCNP || variant == Variant::kFullRGNP;
  }
  bool is_gaussian() const {
    return variant == Variant::kGNP || variant == Variant::kRGNP ||
           variant == Variant::kFullRGNP;
  }

  std::size_t encoder_input_dim() const;
  std::size_t decoder_input_dim() const;
  std::size_t decoder_output_dim() const;

  /// Throws on incompatible combinations (e.g. a conditional variant with
  /// a low-rank head, or d_sigma = 0 on a Gaussian variant).
  void validate() const;
};

/// Flat named parameter store. Order is fixed by the spec so that
/// checkpoints and flattened gradient vectors are stable.
struct ModelParams {
  std::vector<std::string> names;
  std::vector<Tensor> tensors;

  std::size_t total_size() const;
  Tensor flatten() const;
  void unflatten(const Tensor& flat);
  const Tensor& find(const std::string& name) const;
};

/// Weights uniform in +-sqrt(6/fan_in), biases zero; deterministic in seed.
ModelParams init(const ModelSpec& spec, std::uint64_t seed);

/// Predictive distribution over target outputs: either mean-field (one
/// Gaussian per target/output) or a joint low-rank multivariate Gaussian
/// with covariance k(F_m, F_m') v_m v_m' + diag(noise_std^2).
struct Predictive {
  bool mean_field = true;

  // mean-field fields
  Tensor means;  // [M x d_y]
  Tensor stds;   // [M x d_y], strictly positive

  // low-rank fields (d_y = 1)
  bool kvv = false;
  Tensor mean;       // [M]
  Tensor factors;    // [M x d_sigma]
  Tensor scales;     // [M]; all ones for the linear head
  Tensor noise_std;  // [M], >= 1e-3

  std::size_t n_targets() const { return mean_field ? means.dim(0) : mean.dim(0); }

  /// Dense covariance of the low-rank head, excluding observation noise.
  Tensor covariance() const;
  /// covariance() + diag(noise_std^2).
  Tensor noisy_covariance() const;
  /// Per-target predictive mean/std of noisy outputs (any head).
  void marginals(Tensor& mean_out, Tensor& std_out) const;
};

Predictive forward(const ModelSpec& spec, const ModelParams& params, const tasks::Task& task);

/// Joint log-likelihood of target outputs under a predictive.
double loglik(const Predictive& pred, const Tensor& target_y);

struct Objective {
  double loss = 0.0;
  std::vector<Tensor> grads;  // parallel to ModelParams.tensors; empty if not requested
};

/// Mean over tasks of -loglik/M (per-target normalization; set
/// `normalize_by_targets` to false for the unnormalized joint loglik).
Objective nll_objective(const ModelSpec& spec, const ModelParams& params,
                        const std::vector<tasks::Task>& batch, bool with_grads = true,
                        bool normalize_by_targets = true);

/// Diagnostics for finite-difference gradient checks. A central difference
/// at h = 1e-5 is only trustworthy when no ReLU preactivation sits within
/// the perturbation's reach of its kink AND no predictive std sits at its
/// floor, where the likelihood's third derivative grows like 1/std^4 and
/// truncation error swamps the comparison.
struct FdSafety {
  double relu_margin = 0.0;  // min |preactivation| over every ReLU
  double min_std = 0.0;      // smallest predictive std (noise channel for low-rank)

  bool safe() const { return relu_margin > 1e-3 && min_std > 0.05; }
};

FdSafety fd_safety(const ModelSpec& spec, const ModelParams& params, const tasks::Task& task);

const char* variant_name(Variant v);
const char* head_name(Head h);
bool parse_variant(const std::string& s, Variant& out);
bool parse_head(const std::string& s, Head& out);

}  // namespace rcnp::models
