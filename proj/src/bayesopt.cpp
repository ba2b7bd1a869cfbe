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

#include "rcnp/bayesopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rcnp/gp.hpp"
#include "rcnp/linalg.hpp"
#include "rcnp/stats.hpp"
#include "rcnp/tasks.hpp"

namespace rcnp::bo {

namespace {

// Canonical Hartmann coefficient tables.
constexpr double kAlpha[4] = {1.0, 1.2, 3.0, 3.2};

constexpr double kA3[4][3] = {
    {3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}, {3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}};
constexpr double kP3[4][3] = {{0.3689, 0.1170, 0.2673},
                              {0.4699, 0.4387, 0.7470},
                              {0.1091, 0.8732, 0.5547},
                              {0.0381, 0.5743, 0.8828}};

constexpr double kA6[4][6] = {{10.0, 3.0, 17.0, 3.5, 1.7, 8.0},
                              {0.05, 10.0, 17.0, 0.1, 8.0, 14.0},
                              {3.0, 3.5, 1.7, 10.0, 17.0, 8.0},
                              {17.0, 8.0, 0.05, 10.0, 0.1, 14.0}};
constexpr double kP6[4][6] = {{0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
                              {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
                              {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
                              {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};

template <std::size_t D>
double hartmann_eval(const double (&A)[4][D], const double (&P)[4][D], const Tensor& x) {
  double outer = 0.0;
  for (int i = 0; i < 4; ++i) {
    double inner = 0.0;
    for (std::size_t j = 0; j < D; ++j) {
      const double d = x[j] - P[i][j];
      inner += A[i][j] * d * d;
    }
    outer += kAlpha[i] * std::exp(-inner);
  }
  return -outer;
}

void check_domain(const Tensor& x, std::size_t d, const std::string& name) {
  if (x.size() != d) {
    throw std::invalid_argument(name + ": expected " + std::to_string(d) + " coordinates, got " +
                                x.shape_str());
  }
  for (std::size_t j = 0; j < d; ++j) {
    if (!(x[j] >= 0.0 && x[j] <= 1.0)) {
      throw std::invalid_argument(name + ": coordinate " + std::to_string(j) + " = " +
                                  std::to_string(x[j]) + " outside [0,1]");
    }
  }
}

void standardize(const std::vector<double>& f, double& shift, double& scale) {
  const double n = static_cast<double>(f.size());
  shift = 0.0;
  for (double v : f) shift += v;
  shift /= n;
  double var = 0.0;
  for (double v : f) var += (v - shift) * (v - shift);
  scale = std::sqrt(var / n);
  if (!(scale > 1e-9)) scale = 1.0;
}

}  // namespace

BlackBox hartmann3() {
  BlackBox bb;
  bb.name = "hartmann3";
  bb.dim = 3;
  bb.fn = [](const Tensor& x) {
    check_domain(x, 3, "hartmann3");
    return hartmann_eval(kA3, kP3, x);
  };
  bb.f_min = -3.86278;
  bb.x_min = Tensor({3}, {0.114614, 0.555649, 0.852547});
  return bb;
}

BlackBox hartmann6() {
  BlackBox bb;
  bb.name = "hartmann6";
  bb.dim = 6;
  bb.fn = [](const Tensor& x) {
    check_domain(x, 6, "hartmann6");
    return hartmann_eval(kA6, kP6, x);
  };
  bb.f_min = -3.32237;
  bb.x_min = Tensor({6}, {0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573});
  return bb;
}

double hartmann(const std::string& name, const Tensor& x) {
  if (name == "hartmann3") return hartmann3().fn(x);
  if (name == "hartmann6") return hartmann6().fn(x);
  throw std::invalid_argument("hartmann: unknown function '" + name + "'");
}

double expected_improvement(double mu, double sigma, double f_best) {
  if (sigma < 0.0) throw std::invalid_argument("expected_improvement: negative sigma");
  const double delta = mu - f_best;
  if (sigma == 0.0) return std::max(delta, 0.0);
  const double z = delta / sigma;
  return delta * stats::normal_cdf(z) + sigma * stats::normal_pdf(z);
}

NpSurrogate::NpSurrogate(models::ModelSpec spec, models::ModelParams params)
    : spec_(std::move(spec)), params_(std::move(params)) {
  spec_.validate();
}

void NpSurrogate::fit(const Tensor& X, const std::vector<double>& f) {
  const std::size_t n = X.dim(0), d = X.dim(1);
  if (n != f.size() || n == 0) throw std::invalid_argument("NpSurrogate::fit: shape mismatch");
  if (d != spec_.d_x) {
    throw std::invalid_argument("NpSurrogate::fit: checkpoint expects d_x = " +
                                std::to_string(spec_.d_x) + ", blackbox has " + std::to_string(d));
  }
  standardize(f, shift_, scale_);
  ctx_x_ = Tensor({n, d});
  for (std::size_t i = 0; i < ctx_x_.size(); ++i) ctx_x_[i] = 4.0 * X[i] - 2.0;
  ctx_y_ = Tensor({n, 1});
  for (std::size_t i = 0; i < n; ++i) ctx_y_[i] = (f[i] - shift_) / scale_;
}

void NpSurrogate::predict(const Tensor& Xq, Tensor& mean, Tensor& std) const {
  const std::size_t k = Xq.dim(0);
  tasks::Task task;
  task.context_x = ctx_x_;
  task.context_y = ctx_y_;
  task.target_x = Tensor({k, Xq.dim(1)});
  for (std::size_t i = 0; i < task.target_x.size(); ++i) task.target_x[i] = 4.0 * Xq[i] - 2.0;
  task.target_y = Tensor({k, 1});
  const models::Predictive pred = models::forward(spec_, params_, task);
  pred.marginals(mean, std);
  for (std::size_t i = 0; i < k; ++i) {
    mean[i] = shift_ + scale_ * mean[i];
    std[i] *= scale_;
  }
}

GpFit gp_surrogate_fit(const Tensor& X, const std::vector<double>& y) {
  const std::size_t n = X.dim(0);
  if (n < 2) throw std::invalid_argument("gp_surrogate_fit: need at least 2 observations");
  if (y.size() != n) throw std::invalid_argument("gp_surrogate_fit: X/Y size mismatch");
  Tensor yv({n});
  for (std::size_t i = 0; i < n; ++i) yv[i] = y[i];
  const Tensor zero({n});

  GpFit best;
  best.log_marginal = -std::numeric_limits<double>::infinity();
  const double noise_grid[3] = {1e-6, 1e-4, 1e-2};
  for (int li = 0; li < 16; ++li) {
    const double ell =
        std::exp(std::log(0.05) + (std::log(2.0) - std::log(0.05)) * li / 15.0);
    const gp::KernelSpec unit = gp::KernelSpec::matern52(ell, 1.0);
    const Tensor K0 = gp::gram(unit, X, X);
    for (int ti = 0; ti < 8; ++ti) {
      const double theta = std::exp(std::log(0.1) + (std::log(10.0) - std::log(0.1)) * ti / 7.0);
      for (double s2 : noise_grid) {
        Tensor K({n, n});
        for (std::size_t i = 0; i < K.size(); ++i) K[i] = theta * K0[i];
        for (std::size_t i = 0; i < n; ++i) K.at(i, i) += s2;
        double lml;
        try {
          lml = gp::mvn_logpdf(yv, zero, K);
        } catch (const CholeskyError&) {
          continue;
        }
        if (lml > best.log_marginal) {
          best.log_marginal = lml;
          best.kernel = gp::KernelSpec::matern52(ell, theta);
          best.noise_variance = s2;
        }
      }
    }
  }
  if (!std::isfinite(best.log_marginal)) {
    throw std::runtime_error("gp_surrogate_fit: every grid point failed");
  }
  return best;
}

void GpSurrogate::fit(const Tensor& X, const std::vector<double>& f) {
  const std::size_t n = X.dim(0);
  standardize(f, shift_, scale_);
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = (f[i] - shift_) / scale_;
  const GpFit fit_result = gp_surrogate_fit(X, ys);
  kernel_ = fit_result.kernel;
  noise_variance_ = fit_result.noise_variance;
  X_ = X;
  Tensor K = gp::gram(kernel_, X, X);
  for (std::size_t i = 0; i < n; ++i) K.at(i, i) += noise_variance_;
  chol_ = cholesky(K, 0.0).L;
  Tensor yv({n});
  for (std::size_t i = 0; i < n; ++i) yv[i] = ys[i];
  const Tensor b = tri_solve(chol_, yv, false);
  alpha_ = tri_solve(chol_, b, true);  // (K + s2 I)^-1 y
}

void GpSurrogate::predict(const Tensor& Xq, Tensor& mean, Tensor& std) const {
  const std::size_t n = X_.dim(0), k = Xq.dim(0);
  const Tensor kxq = gp::gram(kernel_, X_, Xq);  // [n x k]
  const Tensor V = tri_solve(chol_, kxq, false);
  mean = Tensor({k});
  std = Tensor({k});
  const double prior_var = gp::kernel_eval(kernel_, Tensor({Xq.dim(1)}), Tensor({Xq.dim(1)}));
  for (std::size_t j = 0; j < k; ++j) {
    double m = 0.0, vsq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      m += kxq.at(i, j) * alpha_[i];
      vsq += V.at(i, j) * V.at(i, j);
    }
    mean[j] = shift_ + scale_ * m;
    std[j] = scale_ * std::sqrt(std::max(prior_var - vsq, 0.0));
  }
}

namespace {

double ei_at(const Surrogate& s, const Tensor& x, double f_best) {
  Tensor xq({1, x.size()}, std::vector<double>(x.data(), x.data() + x.size()));
  Tensor mean, std;
  s.predict(xq, mean, std);
  return expected_improvement(mean[0], std[0], f_best);
}

}  // namespace

Tensor propose(const Surrogate& surrogate, double f_best, std::size_t dim, Rng& rng) {
  constexpr std::size_t kCandidates = 512;
  constexpr std::size_t kTopStarts = 4;
  constexpr std::size_t kSweepsPerStart = 4;
  constexpr int kHalvings = 20;

  Tensor cands({kCandidates, dim});
  for (std::size_t i = 0; i < cands.size(); ++i) cands[i] = rng.uniform();
  Tensor mean, std;
  surrogate.predict(cands, mean, std);
  std::vector<std::size_t> order(kCandidates);
  std::vector<double> ei(kCandidates);
  for (std::size_t i = 0; i < kCandidates; ++i) {
    ei[i] = expected_improvement(mean[i], std[i], f_best);
    order[i] = i;
  }
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return ei[a] > ei[b]; });

  Tensor best_x({dim});
  for (std::size_t j = 0; j < dim; ++j) best_x[j] = cands.at(order[0], j);
  double best_ei = ei[order[0]];

  for (std::size_t s = 0; s < kTopStarts; ++s) {
    Tensor x({dim});
    for (std::size_t j = 0; j < dim; ++j) x[j] = cands.at(order[s], j);
    double cur = ei[order[s]];
    for (std::size_t sweep = 0; sweep < kSweepsPerStart; ++sweep) {
      for (std::size_t j = 0; j < dim; ++j) {
        double step = 0.25;
        for (int h = 0; h < kHalvings; ++h) {
          bool moved = false;
          for (double dir : {+1.0, -1.0}) {
            Tensor trial = x;
            trial[j] = std::clamp(x[j] + dir * step, 0.0, 1.0);
            if (trial[j] == x[j]) continue;
            const double v = ei_at(surrogate, trial, f_best);
            if (v > cur) {
              cur = v;
              x = trial;
              moved = true;
              break;
            }
          }
          if (!moved) step *= 0.5;
        }
      }
    }
    if (cur > best_ei) {
      best_ei = cur;
      best_x = x;
    }
  }
  return best_x;
}

BOTrace bo_run(Surrogate& surrogate, const BlackBox& blackbox, std::size_t init,
               std::size_t steps, Rng& rng, ProposalRule rule) {
  if (init < 1) throw std::invalid_argument("bo_run: need at least one initial observation");
  BOTrace trace;
  auto record = [&](const Tensor& x, double y) {
    trace.points.push_back(x);
    trace.values.push_back(y);
    const double prev =
        trace.best.empty() ? std::numeric_limits<double>::infinity() : trace.best.back();
    trace.best.push_back(std::min(prev, y));
    trace.error.push_back(std::abs(trace.best.back() - blackbox.f_min));
  };

  for (std::size_t i = 0; i < init; ++i) {
    Tensor x({blackbox.dim});
    for (std::size_t j = 0; j < blackbox.dim; ++j) x[j] = rng.uniform();
    record(x, blackbox.fn(x));
  }

  for (std::size_t step = 0; step < steps; ++step) {
    Tensor x({blackbox.dim});
    if (rule == ProposalRule::kUniformRandom) {
      for (std::size_t j = 0; j < blackbox.dim; ++j) x[j] = rng.uniform();
    } else {
      const std::size_t n = trace.points.size();
      Tensor X({n, blackbox.dim});
      std::vector<double> f(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < blackbox.dim; ++j) X.at(i, j) = trace.points[i][j];
        f[i] = -trace.values[i];  // maximization form
      }
      surrogate.fit(X, f);
      const double f_best = -trace.best.back();
      x = propose(surrogate, f_best, blackbox.dim, rng);
    }
    record(x, blackbox.fn(x));
  }
  return trace;
}

}  // namespace rcnp::bo
