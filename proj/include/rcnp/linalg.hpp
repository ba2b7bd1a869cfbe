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

#include <stdexcept>
#include <string>

#include "rcnp/tensor.hpp"

namespace rcnp {

/// Raised when a matrix is not positive definite even after jitter
/// escalation. `pivot` is the row whose pivot went nonpositive.
class CholeskyError : public std::runtime_error {
 public:
  CholeskyError(std::size_t pivot_index, double jitter)
      : std::runtime_error("cholesky: non-positive pivot at index " + std::to_string(pivot_index) +
                           " (last jitter tried " + std::to_string(jitter) + ")"),
        pivot(pivot_index) {}
  std::size_t pivot;
};

struct CholeskyResult {
  Tensor L;            // lower triangular, upper strictly zero
  double jitter_used;  // the diagonal boost that succeeded
};

/// Lower Cholesky factor of a + jitter*I. Starts at the caller-supplied
/// jitter and escalates tenfold up to 1e-4 before throwing CholeskyError
/// (a zero start escalates from 1e-8).
CholeskyResult cholesky(const Tensor& a, double jitter = 1e-8);

/// Solve L x = b (or L^T x = b when transpose). b may be rank 1 [n] or
/// rank 2 [n x k]; the result matches b's shape.
Tensor tri_solve(const Tensor& L, const Tensor& b, bool transpose);

// Raw dense kernels on row-major buffers. c is written (gemm_*) or
// accumulated into (gemm_*_acc).
namespace detail {
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n);                 // c = a[m x k] * b[k x n]
void gemm_nt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n);             // c[m x k] += a[m x n] * b[k x n]^T
void gemm_tn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n);             // c[k x n] += a[m x k]^T * b[m x n]
}  // namespace detail

/// Strict rank-2 matrix product.
Tensor matmul_plain(const Tensor& a, const Tensor& b);

}  // namespace rcnp
