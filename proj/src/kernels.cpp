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

#include "rcnp/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace rcnp::gp {

KernelSpec KernelSpec::eq(double lengthscale, double output_scale) {
  KernelSpec k;
  k.kind = Kern::kEQ;
  k.lengthscale = lengthscale;
  k.output_scale = output_scale;
  return k;
}

KernelSpec KernelSpec::matern12(double lengthscale, double output_scale) {
  KernelSpec k = eq(lengthscale, output_scale);
  k.kind = Kern::kMatern12;
  return k;
}

KernelSpec KernelSpec::matern32(double lengthscale, double output_scale) {
  KernelSpec k = eq(lengthscale, output_scale);
  k.kind = Kern::kMatern32;
  return k;
}

KernelSpec KernelSpec::matern52(double lengthscale, double output_scale) {
  KernelSpec k = eq(lengthscale, output_scale);
  k.kind = Kern::kMatern52;
  return k;
}

KernelSpec KernelSpec::weakly_periodic(double decay_lengthscale, double periodic_lengthscale,
                                       double period, double output_scale) {
  KernelSpec k;
  k.kind = Kern::kWeaklyPeriodic;
  k.decay_lengthscale = decay_lengthscale;
  k.periodic_lengthscale = periodic_lengthscale;
  k.period = period;
  k.output_scale = output_scale;
  return k;
}

KernelSpec KernelSpec::sum(KernelSpec a, KernelSpec b, double output_scale) {
  KernelSpec k;
  k.kind = Kern::kSum;
  k.output_scale = output_scale;
  k.children.push_back(std::move(a));
  k.children.push_back(std::move(b));
  return k;
}

KernelSpec KernelSpec::product(KernelSpec a, KernelSpec b, double output_scale) {
  KernelSpec k = sum(std::move(a), std::move(b), output_scale);
  k.kind = Kern::kProduct;
  return k;
}

void KernelSpec::validate() const {
  if (!(output_scale > 0.0)) throw std::invalid_argument("KernelSpec: output scale must be > 0");
  switch (kind) {
    case Kern::kSum:
    case Kern::kProduct:
      if (children.size() != 2) throw std::invalid_argument("KernelSpec: composite needs 2 children");
      children[0].validate();
      children[1].validate();
      break;
    case Kern::kWeaklyPeriodic:
      if (!(decay_lengthscale > 0.0) || !(periodic_lengthscale > 0.0) || !(period > 0.0)) {
        throw std::invalid_argument("KernelSpec: weakly-periodic scales must be > 0");
      }
      break;
    default:
      if (!(lengthscale > 0.0)) throw std::invalid_argument("KernelSpec: lengthscale must be > 0");
  }
}

namespace {

double eval_rec(const KernelSpec& k, const double* x, const double* y, std::size_t d) {
  switch (k.kind) {
    case Kern::kSum:
      return k.output_scale *
             (eval_rec(k.children[0], x, y, d) + eval_rec(k.children[1], x, y, d));
    case Kern::kProduct:
      return k.output_scale *
             (eval_rec(k.children[0], x, y, d) * eval_rec(k.children[1], x, y, d));
    case Kern::kWeaklyPeriodic: {
      double sq = 0.0, per = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = x[j] - y[j];
        sq += diff * diff;
        const double s = std::sin(M_PI * diff / k.period);
        per += s * s;
      }
      return k.output_scale *
             std::exp(-sq / (2.0 * k.decay_lengthscale * k.decay_lengthscale) -
                      2.0 * per / (k.periodic_lengthscale * k.periodic_lengthscale));
    }
    default: {
      double sq = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = x[j] - y[j];
        sq += diff * diff;
      }
      const double r = std::sqrt(sq) / k.lengthscale;
      switch (k.kind) {
        case Kern::kEQ:
          return k.output_scale * std::exp(-0.5 * r * r);
        case Kern::kMatern12:
          return k.output_scale * std::exp(-r);
        case Kern::kMatern32: {
          const double a = std::sqrt(3.0) * r;
          return k.output_scale * (1.0 + a) * std::exp(-a);
        }
        case Kern::kMatern52: {
          const double a = std::sqrt(5.0) * r;
          return k.output_scale * (1.0 + a + 5.0 / 3.0 * r * r) * std::exp(-a);
        }
        default:
          throw std::logic_error("kernel_eval: unreachable");
      }
    }
  }
}

}  // namespace

double kernel_eval(const KernelSpec& k, const Tensor& x, const Tensor& x2) {
  if (x.rank() != 1 || x2.rank() != 1 || x.dim(0) != x2.dim(0)) {
    throw std::invalid_argument("kernel_eval: dimension mismatch " + x.shape_str() + " vs " +
                                x2.shape_str());
  }
  return eval_rec(k, x.data(), x2.data(), x.dim(0));
}

Tensor gram(const KernelSpec& k, const Tensor& X, const Tensor& X2) {
  if (X.rank() != 2 || X2.rank() != 2 || X.dim(1) != X2.dim(1)) {
    throw std::invalid_argument("gram: dimension mismatch " + X.shape_str() + " vs " +
                                X2.shape_str());
  }
  const std::size_t n = X.dim(0), m = X2.dim(0), d = X.dim(1);
  Tensor G({n, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      G.at(i, j) = eval_rec(k, X.data() + i * d, X2.data() + j * d, d);
  return G;
}

namespace {

KernelSpec base_kernel(int which, double lengthscale) {
  switch (which) {
    case 0:
      return KernelSpec::eq(lengthscale);
    case 1:
      return KernelSpec::matern12(lengthscale);
    case 2:
      return KernelSpec::matern32(lengthscale);
    default:
      return KernelSpec::matern52(lengthscale);
  }
}

}  // namespace

KernelSpec sample_kernel_regime(KernelRegime regime, std::size_t d_x, Rng& rng) {
  const double log_ell0 = std::log(std::sqrt(static_cast<double>(d_x)) / 4.0);
  switch (regime) {
    case KernelRegime::kMaternFixed:
      return KernelSpec::matern52(std::sqrt(static_cast<double>(d_x)) / 4.0, 1.0);
    case KernelRegime::kMaternSampled: {
      const double ell = rng.lognormal(log_ell0, 0.5);
      const double theta = rng.lognormal(0.0, 1.0);
      return KernelSpec::matern52(ell, theta);
    }
    case KernelRegime::kKernelSingle: {
      const int which = static_cast<int>(rng.uniform_int(0, 3));
      const double ell = rng.lognormal(log_ell0, 0.5);
      const double theta = rng.lognormal(0.0, 1.0);
      KernelSpec k = base_kernel(which, ell);
      k.output_scale = theta;
      return k;
    }
    case KernelRegime::kKernelMultiple: {
      // k = theta1 * k1(l1) k2(l2) + theta2 * k3(l3) k4(l4); each factor is
      // a base kernel or absent, and a term whose factors are all absent is
      // dropped. Draw order: kinds, lengthscales, term scales.
      while (true) {
        int kind[4];
        double ell[4], theta[2];
        for (int i = 0; i < 4; ++i) kind[i] = static_cast<int>(rng.uniform_int(-1, 3));  // -1 = NA
        for (int i = 0; i < 4; ++i) ell[i] = rng.lognormal(log_ell0, 0.5);
        for (int j = 0; j < 2; ++j) theta[j] = rng.lognormal(0.0, 1.0);
        std::vector<KernelSpec> terms;
        for (int j = 0; j < 2; ++j) {
          const int a = kind[2 * j], b = kind[2 * j + 1];
          if (a < 0 && b < 0) continue;
          if (a >= 0 && b >= 0) {
            terms.push_back(KernelSpec::product(base_kernel(a, ell[2 * j]),
                                                base_kernel(b, ell[2 * j + 1]), theta[j]));
          } else {
            KernelSpec single = base_kernel(a >= 0 ? a : b, a >= 0 ? ell[2 * j] : ell[2 * j + 1]);
            single.output_scale = theta[j];
            terms.push_back(std::move(single));
          }
        }
        if (terms.empty()) continue;  // all four factors absent: redraw
        if (terms.size() == 1) return terms[0];
        return KernelSpec::sum(std::move(terms[0]), std::move(terms[1]));
      }
    }
  }
  throw std::logic_error("sample_kernel_regime: unreachable");
}

}  // namespace rcnp::gp
