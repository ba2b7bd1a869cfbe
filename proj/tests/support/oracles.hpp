// Shared test-only oracles. These deliberately use naive algorithms so they
// stay independent of the library implementations they check.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "rcnp/tensor.hpp"

namespace testsupport {

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
inline std::vector<double> sym_eigenvalues(const rcnp::Tensor& a, int sweeps = 64) {
  const std::size_t n = a.dim(0);
  rcnp::Tensor m = a;
  for (int s = 0; s < sweeps; ++s) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += m.at(i, j) * m.at(i, j);
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = m.at(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (m.at(q, q) - m.at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = m.at(k, p), akq = m.at(k, q);
          m.at(k, p) = c * akp - sn * akq;
          m.at(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = m.at(p, k), aqk = m.at(q, k);
          m.at(p, k) = c * apk - sn * aqk;
          m.at(q, k) = sn * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = m.at(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

// Naive O(n^3) matrix product.
inline rcnp::Tensor matmul_loop(const rcnp::Tensor& a, const rcnp::Tensor& b) {
  rcnp::Tensor c({a.dim(0), b.dim(1)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < b.dim(1); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.dim(1); ++k) acc += a.at(i, k) * b.at(k, j);
      c.at(i, j) = acc;
    }
  return c;
}

// Gauss-Jordan dense inverse; for small oracle matrices only.
inline rcnp::Tensor dense_inverse(rcnp::Tensor a) {
  const std::size_t n = a.dim(0);
  rcnp::Tensor inv = rcnp::Tensor::eye(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a.at(r, col)) > std::abs(a.at(piv, col))) piv = r;
    for (std::size_t c = 0; c < n; ++c) {
      std::swap(a.at(col, c), a.at(piv, c));
      std::swap(inv.at(col, c), inv.at(piv, c));
    }
    const double d = a.at(col, col);
    for (std::size_t c = 0; c < n; ++c) {
      a.at(col, c) /= d;
      inv.at(col, c) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a.at(r, col);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) {
        a.at(r, c) -= f * a.at(col, c);
        inv.at(r, c) -= f * inv.at(col, c);
      }
    }
  }
  return inv;
}

inline double max_abs_diff(const rcnp::Tensor& a, const rcnp::Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

inline double frobenius(const rcnp::Tensor& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * a[i];
  return std::sqrt(s);
}

}  // namespace testsupport
