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

#include "rcnp/gp.hpp"

#include <cmath>
#include <stdexcept>

#include "rcnp/linalg.hpp"

namespace rcnp::gp {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

Tensor GPPosterior::noisy_cov() const {
  Tensor c = cov;
  for (std::size_t i = 0; i < c.dim(0); ++i) c.at(i, i) += noise_variance;
  return c;
}

Tensor sample_prior(const KernelSpec& k, const Tensor& X, double noise_variance, Rng& rng) {
  const std::size_t n = X.dim(0);
  if (n < 1) throw std::invalid_argument("sample_prior: need at least one input row");
  const CholeskyResult ch = cholesky(gram(k, X, X), 1e-8);
  Tensor z({n});
  for (std::size_t i = 0; i < n; ++i) z[i] = rng.normal();
  Tensor y({n});
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j <= i; ++j) acc += ch.L.at(i, j) * z[j];
    y[i] = acc;
  }
  if (noise_variance > 0.0) {
    const double s = std::sqrt(noise_variance);
    for (std::size_t i = 0; i < n; ++i) y[i] += s * rng.normal();
  }
  return y;
}

GPPosterior posterior(const KernelSpec& k, const Tensor& X, const Tensor& Y, const Tensor& Xs,
                      double noise_variance) {
  const std::size_t m = Xs.dim(0);
  GPPosterior post;
  post.noise_variance = noise_variance;
  Tensor kss = gram(k, Xs, Xs);
  const std::size_t n = X.size() == 0 ? 0 : X.dim(0);
  if (n == 0) {
    post.mean = Tensor({m});
    post.cov = std::move(kss);
    return post;
  }
  if (Y.size() != n) {
    throw std::invalid_argument("posterior: Y size " + std::to_string(Y.size()) +
                                " != context count " + std::to_string(n));
  }
  Tensor kxx = gram(k, X, X);
  for (std::size_t i = 0; i < n; ++i) kxx.at(i, i) += noise_variance;
  const CholeskyResult ch = cholesky(kxx, 0.0);
  Tensor kxs = gram(k, X, Xs);                            // [n x m]
  Tensor A = tri_solve(ch.L, kxs, false);                 // L^-1 Kxs
  Tensor yv({n}, std::vector<double>(Y.data(), Y.data() + n));
  Tensor b = tri_solve(ch.L, yv, false);                  // L^-1 y

  post.mean = Tensor({m});
  for (std::size_t j = 0; j < m; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += A[i * m + j] * b[i];
    post.mean[j] = acc;
  }
  // cov = Kss - A^T A
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += A[i * m + r] * A[i * m + c];
      kss.at(r, c) -= acc;
    }
  }
  post.cov = std::move(kss);
  return post;
}

double mvn_logpdf(const Tensor& x, const Tensor& mean, const Tensor& cov) {
  const std::size_t m = x.size();
  if (mean.size() != m || cov.rank() != 2 || cov.dim(0) != m || cov.dim(1) != m) {
    throw std::invalid_argument("mvn_logpdf: inconsistent shapes x=" + x.shape_str() +
                                " mean=" + mean.shape_str() + " cov=" + cov.shape_str());
  }
  const CholeskyResult ch = cholesky(cov, 0.0);
  Tensor d({m});
  for (std::size_t i = 0; i < m; ++i) d[i] = x[i] - mean[i];
  const Tensor z = tri_solve(ch.L, d, false);
  double quad = 0.0, logdet = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    quad += z[i] * z[i];
    logdet += std::log(ch.L.at(i, i));
  }
  return -0.5 * (quad + static_cast<double>(m) * kLog2Pi) - logdet;
}

double kl_gaussian(const Tensor& p_mean, const Tensor& p_cov, const Tensor& q_mean,
                   const Tensor& q_cov) {
  const std::size_t m = p_mean.size();
  if (q_mean.size() != m || p_cov.dim(0) != m || q_cov.dim(0) != m) {
    throw std::invalid_argument("kl_gaussian: inconsistent dimensions");
  }
  const CholeskyResult chp = cholesky(p_cov, 0.0);
  const CholeskyResult chq = cholesky(q_cov, 0.0);
  // trace(Sq^-1 Sp) = || Lq^-1 Lp ||_F^2
  const Tensor W = tri_solve(chq.L, chp.L, false);
  double trace = 0.0;
  for (std::size_t i = 0; i < W.size(); ++i) trace += W[i] * W[i];
  Tensor d({m});
  for (std::size_t i = 0; i < m; ++i) d[i] = q_mean[i] - p_mean[i];
  const Tensor z = tri_solve(chq.L, d, false);
  double quad = 0.0, logdet_q = 0.0, logdet_p = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    quad += z[i] * z[i];
    logdet_q += std::log(chq.L.at(i, i));
    logdet_p += std::log(chp.L.at(i, i));
  }
  return 0.5 * (trace + quad - static_cast<double>(m)) + logdet_q - logdet_p;
}

double kl_univariate(double p_mean, double p_std, double q_mean, double q_std) {
  const double dm = p_mean - q_mean;
  const double r2 = (p_std * p_std + dm * dm) / (q_std * q_std);
  return std::log(q_std / p_std) + 0.5 * (r2 - 1.0);
}

}  // namespace rcnp::gp
