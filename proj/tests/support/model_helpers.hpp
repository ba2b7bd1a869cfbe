// Helpers shared by model-level tests and the acceptance suite.
#pragma once

#include <cmath>
#include <vector>

#include "rcnp/models.hpp"
#include "rcnp/rng.hpp"
#include "rcnp/tasks.hpp"
#include "rcnp/tensor.hpp"

namespace testsupport {

inline rcnp::models::ModelSpec small_spec(rcnp::models::Variant v, rcnp::models::Head h,
                                          std::size_t d_x, std::size_t width = 16,
                                          std::size_t d_sigma = 3) {
  rcnp::models::ModelSpec s;
  s.variant = v;
  s.head = h;
  s.comparison = (v == rcnp::models::Variant::kFullRCNP || v == rcnp::models::Variant::kFullRGNP)
                     ? rcnp::encoding::Comparison::kDistance
                     : rcnp::encoding::Comparison::kDifference;
  s.d_x = d_x;
  s.embed_dim = width;
  s.enc_width = width;
  s.dec_width = width;
  s.d_sigma = d_sigma;
  return s;
}

inline rcnp::models::Head default_head(rcnp::models::Variant v, bool kvv = false) {
  using rcnp::models::Head;
  using rcnp::models::Variant;
  const bool gaussian = v == Variant::kGNP || v == Variant::kRGNP || v == Variant::kFullRGNP;
  if (!gaussian) return Head::kMeanField;
  return kvv ? Head::kLowRankKvv : Head::kLowRankLinear;
}

inline std::vector<rcnp::models::Variant> all_variants() {
  using rcnp::models::Variant;
  return {Variant::kCNP,  Variant::kGNP,      Variant::kRCNP,
          Variant::kRGNP, Variant::kFullRCNP, Variant::kFullRGNP};
}

// A small random task with the given counts, inputs uniform in [-2,2]^d and
// outputs standard normal (distribution-free; for architectural tests).
inline rcnp::tasks::Task random_task(std::size_t n, std::size_t m, std::size_t d_x,
                                     rcnp::Rng& rng) {
  rcnp::tasks::Task t;
  t.context_x = rcnp::Tensor({n, d_x});
  t.context_y = rcnp::Tensor({n, 1});
  t.target_x = rcnp::Tensor({m, d_x});
  t.target_y = rcnp::Tensor({m, 1});
  for (std::size_t i = 0; i < t.context_x.size(); ++i) t.context_x[i] = rng.uniform(-2, 2);
  for (std::size_t i = 0; i < t.target_x.size(); ++i) t.target_x[i] = rng.uniform(-2, 2);
  for (std::size_t i = 0; i < n; ++i) t.context_y[i] = rng.normal();
  for (std::size_t i = 0; i < m; ++i) t.target_y[i] = rng.normal();
  t.generator = "random";
  return t;
}

// Random rotation via Gram-Schmidt of a Gaussian matrix, determinant fixed
// to +1 by flipping the last column if needed.
inline rcnp::Tensor random_rotation(std::size_t d, rcnp::Rng& rng) {
  rcnp::Tensor q({d, d});
  for (std::size_t c = 0; c < d; ++c) {
    std::vector<double> v(d);
    for (std::size_t r = 0; r < d; ++r) v[r] = rng.normal();
    for (std::size_t pc = 0; pc < c; ++pc) {
      double dot = 0.0;
      for (std::size_t r = 0; r < d; ++r) dot += v[r] * q.at(r, pc);
      for (std::size_t r = 0; r < d; ++r) v[r] -= dot * q.at(r, pc);
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (std::size_t r = 0; r < d; ++r) q.at(r, c) = v[r] / norm;
  }
  // determinant sign via triangular-free expansion for d<=3, generic fallback
  double det = 0.0;
  if (d == 1) {
    det = q.at(0, 0);
  } else if (d == 2) {
    det = q.at(0, 0) * q.at(1, 1) - q.at(0, 1) * q.at(1, 0);
  } else {
    det = q.at(0, 0) * (q.at(1, 1) * q.at(2, 2) - q.at(1, 2) * q.at(2, 1)) -
          q.at(0, 1) * (q.at(1, 0) * q.at(2, 2) - q.at(1, 2) * q.at(2, 0)) +
          q.at(0, 2) * (q.at(1, 0) * q.at(2, 1) - q.at(1, 1) * q.at(2, 0));
  }
  if (det < 0.0) {
    for (std::size_t r = 0; r < d; ++r) q.at(r, d - 1) = -q.at(r, d - 1);
  }
  return q;
}

// Apply x -> Q x + c to every input of a task.
inline rcnp::tasks::Task rigid_transform_task(const rcnp::tasks::Task& task,
                                              const rcnp::Tensor& Q, const rcnp::Tensor& c) {
  rcnp::tasks::Task t = task;
  const std::size_t d = task.d_x();
  auto apply = [&](rcnp::Tensor& X) {
    for (std::size_t i = 0; i < X.dim(0); ++i) {
      std::vector<double> out(d, 0.0);
      for (std::size_t r = 0; r < d; ++r) {
        out[r] = c[r];
        for (std::size_t k = 0; k < d; ++k) out[r] += Q.at(r, k) * X.at(i, k);
      }
      for (std::size_t r = 0; r < d; ++r) X.at(i, r) = out[r];
    }
  };
  apply(t.context_x);
  apply(t.target_x);
  return t;
}

// Max absolute difference between the outputs of two predictives
// (means/stds for mean-field; mean, covariance and noise for low-rank).
inline double predictive_deviation(const rcnp::models::Predictive& a,
                                   const rcnp::models::Predictive& b) {
  double worst = 0.0;
  auto acc = [&](const rcnp::Tensor& x, const rcnp::Tensor& y) {
    for (std::size_t i = 0; i < x.size(); ++i)
      worst = std::max(worst, std::abs(x[i] - y[i]));
  };
  if (a.mean_field) {
    acc(a.means, b.means);
    acc(a.stds, b.stds);
  } else {
    acc(a.mean, b.mean);
    acc(a.covariance(), b.covariance());
    acc(a.noise_std, b.noise_std);
  }
  return worst;
}

}  // namespace testsupport
