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

#include <cmath>
#include <functional>

#include "rcnp/cli.hpp"
#include "rcnp/gp.hpp"
#include "rcnp/grad_check.hpp"
#include "rcnp/linalg.hpp"
#include "rcnp/models.hpp"
#include "rcnp/tasks.hpp"

namespace rcnp::cli {

namespace {

using models::Head;
using models::ModelParams;
using models::ModelSpec;
using models::Predictive;
using models::Variant;

ModelSpec prop_spec(Variant v, std::size_t d_x, std::size_t width) {
  ModelSpec s;
  s.variant = v;
  const bool gaussian =
      v == Variant::kGNP || v == Variant::kRGNP || v == Variant::kFullRGNP;
  s.head = gaussian ? Head::kLowRankLinear : Head::kMeanField;
  s.comparison = (v == Variant::kFullRCNP || v == Variant::kFullRGNP)
                     ? encoding::Comparison::kDistance
                     : encoding::Comparison::kDifference;
  s.d_x = d_x;
  s.embed_dim = width;
  s.enc_width = width;
  s.dec_width = width;
  s.d_sigma = 4;
  return s;
}

tasks::Task random_prop_task(std::size_t n, std::size_t m, std::size_t d_x, Rng& rng) {
  tasks::Task t;
  t.context_x = Tensor({n, d_x});
  t.context_y = Tensor({n, 1});
  t.target_x = Tensor({m, d_x});
  t.target_y = Tensor({m, 1});
  for (std::size_t i = 0; i < t.context_x.size(); ++i) t.context_x[i] = rng.uniform(-2, 2);
  for (std::size_t i = 0; i < t.target_x.size(); ++i) t.target_x[i] = rng.uniform(-2, 2);
  for (std::size_t i = 0; i < n; ++i) t.context_y[i] = rng.normal();
  for (std::size_t i = 0; i < m; ++i) t.target_y[i] = rng.normal();
  t.generator = "prop";
  return t;
}

double deviation(const Predictive& a, const Predictive& b) {
  double worst = 0.0;
  auto acc = [&](const Tensor& x, const Tensor& y) {
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x[i] - y[i]));
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

Tensor random_rotation(std::size_t d, Rng& rng) {
  Tensor q({d, d});
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
  return q;  // orthogonal; reflections are fine for distance invariance
}

tasks::Task transform_task(const tasks::Task& task, const Tensor* Q, const Tensor& c) {
  tasks::Task t = task;
  const std::size_t d = task.d_x();
  auto apply = [&](Tensor& X) {
    for (std::size_t i = 0; i < X.dim(0); ++i) {
      std::vector<double> out(d, 0.0);
      for (std::size_t r = 0; r < d; ++r) {
        out[r] = c[r];
        if (Q) {
          for (std::size_t k = 0; k < d; ++k) out[r] += Q->at(r, k) * X.at(i, k);
        } else {
          out[r] += X.at(i, r);
        }
      }
      for (std::size_t r = 0; r < d; ++r) X.at(i, r) = out[r];
    }
  };
  apply(t.context_x);
  apply(t.target_x);
  return t;
}

struct Property {
  std::string name;
  std::string suite;
  std::function<bool(std::size_t trial, Rng& rng, std::string& detail)> check;
};

std::vector<Property> build_properties(bool negate_control) {
  std::vector<Property> props;

  // Equivariance suite: fresh init and task per trial, any parameters.
  for (Variant v : {Variant::kRCNP, Variant::kRGNP}) {
    props.push_back(
        {std::string("translation-") + models::variant_name(v), "equivariance",
         [v](std::size_t, Rng& rng, std::string& detail) {
           const std::size_t d_x = 1 + rng.uniform_int(0, 2);
           const ModelSpec spec = prop_spec(v, d_x, 32);
           const ModelParams params = models::init(spec, rng.next_u64());
           const tasks::Task task = random_prop_task(8, 6, d_x, rng);
           Tensor c({d_x});
           for (std::size_t j = 0; j < d_x; ++j) c[j] = rng.uniform(-5.0, 5.0);
           const double dev = deviation(models::forward(spec, params, task),
                                        models::forward(spec, params, transform_task(task, nullptr, c)));
           detail = "max deviation " + std::to_string(dev);
           return dev < 1e-6;
         }});
  }
  for (Variant v : {Variant::kFullRCNP, Variant::kFullRGNP}) {
    props.push_back(
        {std::string("rigid-") + models::variant_name(v), "equivariance",
         [v](std::size_t, Rng& rng, std::string& detail) {
           const std::size_t d_x = 2 + rng.uniform_int(0, 1);
           const ModelSpec spec = prop_spec(v, d_x, 32);
           const ModelParams params = models::init(spec, rng.next_u64());
           const tasks::Task task = random_prop_task(6, 4, d_x, rng);
           const Tensor Q = random_rotation(d_x, rng);
           Tensor c({d_x});
           for (std::size_t j = 0; j < d_x; ++j) c[j] = rng.uniform(-5.0, 5.0);
           const double dev = deviation(models::forward(spec, params, task),
                                        models::forward(spec, params, transform_task(task, &Q, c)));
           detail = "max deviation " + std::to_string(dev);
           return dev < 1e-6;
         }});
  }
  props.push_back(
      {negate_control ? "control-cnp-translation(negated)" : "control-cnp-translation",
       "equivariance",
       [negate_control](std::size_t, Rng& rng, std::string& detail) {
         const std::size_t d_x = 1 + rng.uniform_int(0, 2);
         const ModelSpec spec = prop_spec(Variant::kCNP, d_x, 32);
         const ModelParams params = models::init(spec, rng.next_u64());
         const tasks::Task task = random_prop_task(8, 6, d_x, rng);
         const Tensor c = Tensor::full({d_x}, 4.0);
         const double dev = deviation(models::forward(spec, params, task),
                                      models::forward(spec, params, transform_task(task, nullptr, c)));
         detail = "max deviation " + std::to_string(dev);
         // The CNP must NOT be translation invariant; in negated mode the
         // assertion is flipped to show the suite would catch such a bug.
         return negate_control ? dev < 1e-6 : dev > 1e-3;
       }});

  // Gradient suite: analytic vs central differences on small models.
  for (Variant v : {Variant::kCNP, Variant::kGNP, Variant::kRCNP, Variant::kRGNP,
                    Variant::kFullRCNP, Variant::kFullRGNP}) {
    props.push_back(
        {std::string("nll-grad-") + models::variant_name(v), "gradients",
         [v](std::size_t, Rng& rng, std::string& detail) {
           const ModelSpec spec = prop_spec(v, 1, 8);
           ModelParams params;
           tasks::Task task;
           models::FdSafety safety;
           int attempts = 0;
           do {
             params = models::init(spec, rng.next_u64());
             task = random_prop_task(3, 2, 1, rng);
             safety = models::fd_safety(spec, params, task);
           } while (!safety.safe() && ++attempts < 64);
           const models::Objective obj = models::nll_objective(spec, params, {task}, true);
           Tensor flat({params.total_size()});
           std::size_t off = 0;
           for (const Tensor& g : obj.grads) {
             for (std::size_t i = 0; i < g.size(); ++i) flat[off + i] = g[i];
             off += g.size();
           }
           const ScalarFn f{[&](const Tensor& theta) {
                              ModelParams p2 = params;
                              p2.unflatten(theta);
                              return models::nll_objective(spec, p2, {task}, false).loss;
                            },
                            [&](const Tensor&) { return flat; }};
           const double err = grad_check(f, params.flatten());
           detail = "max rel err " + std::to_string(err);
           return err < 1e-4;
         }});
  }

  // Structural extras exercised under `all`.
  props.push_back({"permutation-invariance", "all",
                   [](std::size_t, Rng& rng, std::string& detail) {
                     const Variant variants[6] = {Variant::kCNP,  Variant::kGNP,
                                                  Variant::kRCNP, Variant::kRGNP,
                                                  Variant::kFullRCNP, Variant::kFullRGNP};
                     const Variant v = variants[rng.uniform_int(0, 5)];
                     const ModelSpec spec = prop_spec(v, 2, 16);
                     const ModelParams params = models::init(spec, rng.next_u64());
                     tasks::Task task = random_prop_task(5, 3, 2, rng);
                     tasks::Task perm = task;
                     for (std::size_t n = 0; n < 5; ++n) {
                       const std::size_t src = 4 - n;
                       for (int j = 0; j < 2; ++j)
                         perm.context_x.at(n, j) = task.context_x.at(src, j);
                       perm.context_y.at(n, 0) = task.context_y.at(src, 0);
                     }
                     const double dev = deviation(models::forward(spec, params, task),
                                                  models::forward(spec, params, perm));
                     detail = "max deviation " + std::to_string(dev);
                     return dev < 1e-9;
                   }});
  props.push_back({"kernel-psd", "all",
                   [](std::size_t, Rng& rng, std::string& detail) {
                     const gp::KernelSpec k = gp::sample_kernel_regime(
                         gp::KernelRegime::kKernelMultiple, 2, rng);
                     const std::size_t n = 4 + rng.uniform_int(0, 12);
                     Tensor X({n, 2});
                     for (std::size_t i = 0; i < X.size(); ++i) X[i] = rng.uniform(-2, 2);
                     const Tensor G = gp::gram(k, X, X);
                     // SPD check via jittered Cholesky at the tolerance 1e-8
                     try {
                       cholesky(G, 1e-8);
                     } catch (const CholeskyError&) {
                       detail = "gram not PSD within 1e-8";
                       return false;
                     }
                     detail = "ok";
                     return true;
                   }});
  return props;
}

}  // namespace

int run_property_suites(const std::string& suite, std::size_t trials, std::uint64_t seed,
                        bool negate_control, std::ostream& out) {
  const auto props = build_properties(negate_control);
  int failures = 0;
  for (const Property& p : props) {
    if (suite != "all" && p.suite != suite) continue;
    std::size_t pass = 0;
    std::string first_failure;
    Rng rng(Rng::mix(seed, std::hash<std::string>{}(p.name)));
    for (std::size_t t = 0; t < trials; ++t) {
      std::string detail;
      if (p.check(t, rng, detail)) {
        ++pass;
      } else if (first_failure.empty()) {
        first_failure = detail;
      }
    }
    out << p.name << ": " << pass << "/" << trials << (pass == trials ? " ok" : " FAIL");
    if (pass != trials) {
      out << " (" << first_failure << ")";
      ++failures;
    }
    out << "\n";
  }
  return failures;
}

}  // namespace rcnp::cli
