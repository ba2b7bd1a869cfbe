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

#include "rcnp/tape.hpp"
#include "rcnp/tensor.hpp"

namespace rcnp::encoding {

/// Pairwise input comparison. Difference induces translation equivariance,
/// Distance induces equivariance to rigid transformations.
enum class Comparison { kDifference, kDistance };

/// Output dimension of a comparison: d_x for Difference, 1 for Distance.
std::size_t comparison_dim(Comparison g, std::size_t d_x);

/// g(x, x*): Difference -> x* - x, Distance -> ||x* - x||_2.
Tensor compare(Comparison g, const Tensor& x, const Tensor& x_star);

/// A network applied to a batch matrix [rows x in] -> [rows x out] on a tape.
using BatchNet = std::function<Val(Tape&, Val)>;

/// Diagonal relational encodings of all M targets at once: row m is
///   sum_n f_r(g(x_n, x*_m), y_n),
/// using the simplification valid when g(x, x) = 0 (true for both supported
/// comparisons). Summation is in fixed context order. Returns [M x d_rel].
/// `mean_aggregation` divides by the term count (ablation; sum is the
/// definition and the default).
Val rho_diag_all(Tape& tape, Comparison g, const BatchNet& f_r, const Tensor& ctx_x,
                 const Tensor& ctx_y, const Tensor& tgt_x, bool mean_aggregation = false);

/// Full relational encodings of all M targets: row m is
///   sum_{n,n'} f_r(g(x_n, x*_m), g(x_n, x_n'), y_n, y_n'),
/// the sum running row-major over (n, n'). Returns [M x d_rel].
Val rho_full_all(Tape& tape, Comparison g, const BatchNet& f_r, const Tensor& ctx_x,
                 const Tensor& ctx_y, const Tensor& tgt_x, bool mean_aggregation = false);

/// Single-target convenience wrappers; x_star is rank-1 [d_x]. Return
/// [1 x d_rel].
Val rho_diag(Tape& tape, Comparison g, const BatchNet& f_r, const Tensor& x_star,
             const Tensor& ctx_x, const Tensor& ctx_y);
Val rho_full(Tape& tape, Comparison g, const BatchNet& f_r, const Tensor& x_star,
             const Tensor& ctx_x, const Tensor& ctx_y);

/// DeepSet context embedding sum_n f_e(x_n, y_n). Returns rank-1 [d_emb].
Val deepset_encode(Tape& tape, const BatchNet& f_e, const Tensor& ctx_x, const Tensor& ctx_y,
                   bool mean_aggregation = false);

}  // namespace rcnp::encoding
