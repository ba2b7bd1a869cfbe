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

#include "rcnp/kernels.hpp"
#include "rcnp/rng.hpp"
#include "rcnp/tensor.hpp"

namespace rcnp::tasks {

/// Generator families. The regime-* families draw a fresh GP kernel per
/// task from the corresponding kernel-sampling regime (used to pretrain
/// Bayesian-optimization surrogates on a distribution over kernels).
enum class Family {
  kEQ,
  kMatern52,
  kWeaklyPeriodic,
  kSawtooth,
  kMixture,
  kRegimeI,
  kRegimeII,
  kRegimeIII,
  kRegimeIV,
};

/// INT draws inputs from the training box [-2,2]^d, OOID from the disjoint
/// box [2,6]^d. A task generated in OOID mode with the same seed uses the
/// same underlying uniform draws, so it is the INT task translated by +4
/// per axis (up to floating-point rounding of the affine map).
enum class RangeMode { kInterpolation, kOutOfInputDistribution };

/// One meta-learning task: a context set, target inputs, and ground-truth
/// target outputs. GP-generated tasks carry their generating kernel and
/// noise so the exact posterior is available as an evaluation reference.
struct Task {
  Tensor context_x;  // [N x d_x]
  Tensor context_y;  // [N x 1]
  Tensor target_x;   // [M x d_x]
  Tensor target_y;   // [M x 1]
  std::string generator;
  std::uint64_t seed = 0;
  bool has_reference = false;
  gp::KernelSpec reference_kernel;
  double reference_noise = 0.0;  // observation noise variance

  std::size_t n_context() const { return context_x.dim(0); }
  std::size_t n_target() const { return target_x.dim(0); }
  std::size_t d_x() const { return context_x.dim(1); }
};

struct TaskConfig {
  Family family = Family::kEQ;
  std::size_t d_x = 1;
  std::size_t n_context_min = 1;
  std::size_t n_context_max = 30;
  std::size_t n_target = 50;
  double noise_variance = 0.05;

  /// Context/target counts and noise for a family at dimension d_x:
  /// GP families draw N in {1..30*d_x} with M = 50*d_x and noise 0.05;
  /// sawtooth and mixture draw N in {1..30} (d_x = 1) or {1..50*d_x},
  /// with M = 100*d_x, noiseless.
  static TaskConfig defaults(Family family, std::size_t d_x);

  void validate() const;
};

/// Dimension-scaled generator hyperparameters.
struct GeneratorHyperparams {
  double lengthscale;           // GP base kernels
  double decay_lengthscale;     // weakly periodic
  double periodic_lengthscale;  // weakly periodic
  double period;                // weakly periodic
  double freq_lo, freq_hi;      // sawtooth frequency range
  double noise_variance;        // 0.05 for GP families, 0 otherwise
};

GeneratorHyperparams default_hyperparams(Family family, std::size_t d_x);

/// Random sawtooth wave f(x) = (omega <x,u> + phase) mod 1 with u uniform
/// on the unit sphere.
struct SawtoothFn {
  double omega = 1.0;
  Tensor direction;  // [d_x], unit norm
  double phase = 0.0;

  double operator()(const double* x, std::size_t d) const;
};

SawtoothFn sample_sawtooth(std::size_t d_x, double freq_lo, double freq_hi, Rng& rng);

Task generate_task(const TaskConfig& cfg, RangeMode mode, Rng& rng);

/// Deterministic in (cfg, count, mode, base_seed): task i is generated from
/// seed Rng::mix(base_seed, i). Tasks may be produced in parallel; output
/// order is by index.
std::vector<Task> generate_epoch(const TaskConfig& cfg, std::size_t count, RangeMode mode,
                                 std::uint64_t base_seed);

/// Shift every input of a task by the same offset (outputs untouched).
/// Test utility for exact-equivariance assertions.
Task translate_task(const Task& task, const Tensor& offset);

const char* family_name(Family f);
gp::KernelSpec family_kernel(Family f, std::size_t d_x);

}  // namespace rcnp::tasks
