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

#include "rcnp/linalg.hpp"

#include <cmath>
#include <cstring>

namespace rcnp {

namespace detail {

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  std::memset(c, 0, m * n * sizeof(double));
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void gemm_nt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n) {
  // c[i,p] += dot(a[i,:], b[p,:]); four b-rows at a time for ILP
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * n;
    double* ci = c + i * k;
    std::size_t p = 0;
    for (; p + 4 <= k; p += 4) {
      const double* b0 = b + p * n;
      const double* b1 = b0 + n;
      const double* b2 = b1 + n;
      const double* b3 = b2 + n;
      double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double av = ai[j];
        s0 += av * b0[j];
        s1 += av * b1[j];
        s2 += av * b2[j];
        s3 += av * b3[j];
      }
      ci[p] += s0;
      ci[p + 1] += s1;
      ci[p + 2] += s2;
      ci[p + 3] += s3;
    }
    for (; p < k; ++p) {
      const double* bp = b + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += ai[j] * bp[j];
      ci[p] += acc;
    }
  }
}

void gemm_tn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n) {
  // c[p,:] += a[i,p] * b[i,:]
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* bi = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += aip * bi[j];
    }
  }
}

}  // namespace detail

Tensor matmul_plain(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw std::invalid_argument("matmul: incompatible shapes " + a.shape_str() + " and " +
                                b.shape_str());
  }
  Tensor c({a.dim(0), b.dim(1)});
  detail::gemm_nn(a.data(), b.data(), c.data(), a.dim(0), a.dim(1), b.dim(1));
  return c;
}

namespace {

// Factorization attempt at a single jitter level. Returns the failed pivot
// index, or -1 on success.
long try_cholesky(const Tensor& a, double jitter, Tensor& L) {
  const std::size_t n = a.dim(0);
  L = Tensor({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a.at(i, j);
      for (std::size_t p = 0; p < j; ++p) s -= L.at(i, p) * L.at(j, p);
      if (i == j) {
        s += jitter;
        if (!(s > 0.0) || !std::isfinite(s)) return static_cast<long>(i);
        L.at(i, i) = std::sqrt(s);
      } else {
        L.at(i, j) = s / L.at(j, j);
      }
    }
  }
  return -1;
}

}  // namespace

CholeskyResult cholesky(const Tensor& a, double jitter) {
  if (a.rank() != 2 || a.dim(0) != a.dim(1)) {
    throw std::invalid_argument("cholesky: expected square matrix, got " + a.shape_str());
  }
  Tensor L;
  long pivot = -1;
  double j = jitter;
  while (true) {
    pivot = try_cholesky(a, j, L);
    if (pivot < 0) return {std::move(L), j};
    if (j == 0.0) {
      j = 1e-8;
    } else if (j < 1e-4) {
      j = std::min(j * 10.0, 1e-4);
    } else {
      break;
    }
  }
  throw CholeskyError(static_cast<std::size_t>(pivot), j);
}

Tensor tri_solve(const Tensor& L, const Tensor& b, bool transpose) {
  if (L.rank() != 2 || L.dim(0) != L.dim(1)) {
    throw std::invalid_argument("tri_solve: L must be square, got " + L.shape_str());
  }
  const std::size_t n = L.dim(0);
  if (b.dim(0) != n || b.rank() > 2) {
    throw std::invalid_argument("tri_solve: rhs shape " + b.shape_str() + " incompatible with L " +
                                L.shape_str());
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (L.at(i, i) == 0.0) {
      throw std::invalid_argument("tri_solve: zero diagonal at index " + std::to_string(i));
    }
  }
  const std::size_t k = b.rank() == 2 ? b.dim(1) : 1;
  Tensor x = b;
  double* xd = x.data();
  if (!transpose) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < k; ++c) {
        double s = xd[i * k + c];
        for (std::size_t p = 0; p < i; ++p) s -= L.at(i, p) * xd[p * k + c];
        xd[i * k + c] = s / L.at(i, i);
      }
    }
  } else {
    for (std::size_t ii = n; ii-- > 0;) {
      for (std::size_t c = 0; c < k; ++c) {
        double s = xd[ii * k + c];
        for (std::size_t p = ii + 1; p < n; ++p) s -= L.at(p, ii) * xd[p * k + c];
        xd[ii * k + c] = s / L.at(ii, ii);
      }
    }
  }
  return x;
}

}  // namespace rcnp
