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

#include "rcnp/kernels.hpp"
#include "rcnp/rng.hpp"
#include "rcnp/tensor.hpp"

namespace rcnp::gp {

/// Exact GP predictive at M query points. `cov` excludes observation noise;
/// `noise_variance` carries it separately so callers choose the noisy or
/// noiseless predictive explicitly.
struct GPPosterior {
  Tensor mean;  // [M]
  Tensor cov;   // [M x M]
  double noise_variance = 0.0;

  /// cov + noise_variance * I.
  Tensor noisy_cov() const;
};

/// Draw y = f + noise at rows of X, f from the kernel's prior (one joint
/// Cholesky draw over all rows).
Tensor sample_prior(const KernelSpec& k, const Tensor& X, double noise_variance, Rng& rng);

/// Exact posterior at Xs given observations (X, Y) under iid noise.
/// N = 0 returns the prior.
GPPosterior posterior(const KernelSpec& k, const Tensor& X, const Tensor& Y, const Tensor& Xs,
                      double noise_variance);

/// Multivariate normal log-density via Cholesky.
double mvn_logpdf(const Tensor& x, const Tensor& mean, const Tensor& cov);

/// KL( N(p_mean, p_cov) || N(q_mean, q_cov) ), closed form.
double kl_gaussian(const Tensor& p_mean, const Tensor& p_cov, const Tensor& q_mean,
                   const Tensor& q_cov);

/// KL between univariate normals given means and standard deviations.
double kl_univariate(double p_mean, double p_std, double q_mean, double q_std);

}  // namespace rcnp::gp
