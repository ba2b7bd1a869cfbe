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

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rcnp/kernels.hpp"
#include "rcnp/models.hpp"
#include "rcnp/rng.hpp"
#include "rcnp/tensor.hpp"

namespace rcnp::bo {

/// Minimization target on the unit hypercube. The known optimum is carried
/// for error reporting only and never reaches the optimizer.
struct BlackBox {
  std::string name;
  std::size_t dim = 0;
  std::function<double(const Tensor&)> fn;
  double f_min = 0.0;
  Tensor x_min;
};

BlackBox hartmann3();
BlackBox hartmann6();
/// Evaluate by name ("hartmann3"/"hartmann6"); throws if x is outside
/// [0,1]^d.
double hartmann(const std::string& name, const Tensor& x);

/// Expected improvement in maximization form: E[max(f(x) - f_best, 0)] for
/// f ~ N(mu, sigma^2). sigma = 0 degrades to max(mu - f_best, 0).
double expected_improvement(double mu, double sigma, double f_best);

/// Queried points and objective values, with the running best and its
/// distance to the known optimum per step.
struct BOTrace {
  std::vector<Tensor> points;
  std::vector<double> values;  // raw objective (minimized)
  std::vector<double> best;    // running minimum
  std::vector<double> error;   // |best - f_min|
};

/// Surrogate over the NEGATED objective f = -h, so that acquisition
/// maximizes. fit() receives raw domain points (rows in [0,1]^d) and f
/// values; predict() fills per-row predictive means and standard deviations.
class Surrogate {
 public:
  virtual ~Surrogate() = default;
  virtual void fit(const Tensor& X, const std::vector<double>& f) = 0;
  virtual void predict(const Tensor& Xq, Tensor& mean, Tensor& std) const = 0;
};

/// Neural-process surrogate: conditions a trained model by feeding the
/// observations as the context set, without touching the weights. Inputs
/// are mapped affinely from [0,1]^d to the training box [-2,2]^d and
/// observations are standardized by the running context moments. Predictive
/// standard deviations include the model's noise channel.
class NpSurrogate : public Surrogate {
 public:
  NpSurrogate(models::ModelSpec spec, models::ModelParams params);
  void fit(const Tensor& X, const std::vector<double>& f) override;
  void predict(const Tensor& Xq, Tensor& mean, Tensor& std) const override;

  const models::ModelParams& params() const { return params_; }

 private:
  models::ModelSpec spec_;
  models::ModelParams params_;
  Tensor ctx_x_;  // mapped inputs [n x d]
  Tensor ctx_y_;  // standardized observations [n x 1]
  double shift_ = 0.0, scale_ = 1.0;
};

/// Exact-GP surrogate with Matern-5/2 kernel; hyperparameters refit by grid
/// search on every fit(). Predictive std is the latent posterior std.
class GpSurrogate : public Surrogate {
 public:
  void fit(const Tensor& X, const std::vector<double>& f) override;
  void predict(const Tensor& Xq, Tensor& mean, Tensor& std) const override;

  const gp::KernelSpec& kernel() const { return kernel_; }
  double noise_variance() const { return noise_variance_; }

 private:
  gp::KernelSpec kernel_;
  double noise_variance_ = 1e-4;
  double shift_ = 0.0, scale_ = 1.0;
  Tensor X_;
  Tensor chol_;   // L of (K + noise I)
  Tensor alpha_;  // solve of standardized y
};

struct GpFit {
  gp::KernelSpec kernel;
  double noise_variance = 0.0;
  double log_marginal = 0.0;
};

/// Type-II maximum likelihood over a fixed log-spaced grid: 16 lengthscales
/// in [0.05, 2], 8 output scales in [0.1, 10], noise in {1e-6, 1e-4, 1e-2}.
/// Grid points where the Cholesky fails are skipped. Needs >= 2 rows.
GpFit gp_surrogate_fit(const Tensor& X, const std::vector<double>& y);

/// Acquisition maximization: 512 uniform candidates, then 16 coordinate
/// sweeps of step-halving line search (20 halvings per coordinate, 4 sweeps
/// from each of the top-4 candidates). Deterministic given the rng state.
Tensor propose(const Surrogate& surrogate, double f_best, std::size_t dim, Rng& rng);

enum class ProposalRule { kExpectedImprovement, kUniformRandom };

/// Five random initial observations, then `steps` queries. The surrogate is
/// refit (NP: re-conditioned; GP: hyperparameters re-estimated) after every
/// observation. kUniformRandom ignores the surrogate and samples proposals
/// uniformly (baseline).
BOTrace bo_run(Surrogate& surrogate, const BlackBox& blackbox, std::size_t init, std::size_t steps,
               Rng& rng, ProposalRule rule = ProposalRule::kExpectedImprovement);

}  // namespace rcnp::bo
