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

#include <vector>

#include "rcnp/rng.hpp"
#include "rcnp/tensor.hpp"

namespace rcnp::gp {

enum class Kern {
  kEQ,
  kMatern12,
  kMatern32,
  kMatern52,
  kWeaklyPeriodic,
  kSum,
  kProduct,
};

/// Composable stationary kernel description. Base kernels carry a
/// lengthscale; every node carries an output scale that multiplies its
/// subtree. Weakly-periodic uses (decay_lengthscale, periodic_lengthscale,
/// period) instead of the plain lengthscale.
struct KernelSpec {
  Kern kind = Kern::kEQ;
  double output_scale = 1.0;
  double lengthscale = 1.0;
  double decay_lengthscale = 2.0;
  double periodic_lengthscale = 4.0;
  double period = 1.0;
  std::vector<KernelSpec> children;  // two entries for kSum / kProduct

  static KernelSpec eq(double lengthscale, double output_scale = 1.0);
  static KernelSpec matern12(double lengthscale, double output_scale = 1.0);
  static KernelSpec matern32(double lengthscale, double output_scale = 1.0);
  static KernelSpec matern52(double lengthscale, double output_scale = 1.0);
  static KernelSpec weakly_periodic(double decay_lengthscale, double periodic_lengthscale,
                                    double period, double output_scale = 1.0);
  static KernelSpec sum(KernelSpec a, KernelSpec b, double output_scale = 1.0);
  static KernelSpec product(KernelSpec a, KernelSpec b, double output_scale = 1.0);

  /// Throws unless all scale parameters are strictly positive.
  void validate() const;
};

/// k(x, x') for rank-1 inputs of equal dimension.
double kernel_eval(const KernelSpec& k, const Tensor& x, const Tensor& x2);

/// Gram matrix: entry (i, j) = k(X[i], X2[j]). X is [N x d], X2 [N2 x d].
Tensor gram(const KernelSpec& k, const Tensor& X, const Tensor& X2);

/// Kernel-sampling regimes for surrogate pretraining:
///   i    Matern-5/2, fixed lengthscale sqrt(d_x)/4, unit scale
///   ii   Matern-5/2, log-normal lengthscale and scale
///   iii  uniform base kernel, log-normal lengthscale and scale
///   iv   sum of two products of base kernels, each factor possibly absent
///        (a draw with every factor absent is rejected and redrawn)
enum class KernelRegime { kMaternFixed, kMaternSampled, kKernelSingle, kKernelMultiple };

KernelSpec sample_kernel_regime(KernelRegime regime, std::size_t d_x, Rng& rng);

}  // namespace rcnp::gp
