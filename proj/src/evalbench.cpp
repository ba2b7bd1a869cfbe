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

#include "rcnp/evalbench.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rcnp/gp.hpp"
#include "rcnp/parallel.hpp"
#include "rcnp/rng.hpp"
#include "rcnp/stats.hpp"

namespace rcnp::bench {

void EvalReport::finalize() {
  const double n = static_cast<double>(per_task.size());
  mean = 0.0;
  for (double v : per_task) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : per_task) var += (v - mean) * (v - mean);
  stddev = std::sqrt(var / n);
}

namespace {

using PredictiveFn = std::function<models::Predictive(const tasks::Task&)>;

EvalReport loglik_report(const PredictiveFn& predict, const std::vector<tasks::Task>& tasks,
                         const std::string& mode) {
  if (tasks.empty()) throw std::invalid_argument("normalized_loglik: empty task set");
  EvalReport rep;
  rep.metric = "loglik";
  rep.mode = mode;
  rep.per_task.resize(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t i) {
    const models::Predictive pred = predict(tasks[i]);
    rep.per_task[i] =
        models::loglik(pred, tasks[i].target_y) / static_cast<double>(tasks[i].n_target());
  });
  rep.finalize();
  return rep;
}

double kl_for_task(const models::Predictive& pred, const tasks::Task& task,
                   bool mean_field_joint) {
  if (!task.has_reference) {
    throw std::invalid_argument("normalized_kl: task '" + task.generator +
                                "' carries no GP reference");
  }
  const gp::GPPosterior post = gp::posterior(task.reference_kernel, task.context_x,
                                             task.context_y, task.target_x, task.reference_noise);
  const std::size_t m = task.n_target();
  const Tensor ref_cov = post.noisy_cov();
  double kl = 0.0;
  if (pred.mean_field && !mean_field_joint) {
    for (std::size_t j = 0; j < m; ++j) {
      kl += gp::kl_univariate(pred.means.at(j, 0), pred.stds.at(j, 0), post.mean[j],
                              std::sqrt(ref_cov.at(j, j)));
    }
  } else if (pred.mean_field) {
    Tensor mean({m}), cov({m, m});
    for (std::size_t j = 0; j < m; ++j) {
      mean[j] = pred.means.at(j, 0);
      cov.at(j, j) = pred.stds.at(j, 0) * pred.stds.at(j, 0);
    }
    kl = gp::kl_gaussian(mean, cov, post.mean, ref_cov);
  } else {
    kl = gp::kl_gaussian(pred.mean, pred.noisy_covariance(), post.mean, ref_cov);
  }
  return kl / static_cast<double>(m);
}

EvalReport kl_report(const PredictiveFn& predict, const std::vector<tasks::Task>& tasks,
                     bool mean_field_joint, const std::string& mode) {
  if (tasks.empty()) throw std::invalid_argument("normalized_kl: empty task set");
  EvalReport rep;
  rep.metric = "kl";
  rep.mode = mode;
  rep.per_task.resize(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t i) {
    rep.per_task[i] = kl_for_task(predict(tasks[i]), tasks[i], mean_field_joint);
  });
  rep.finalize();
  return rep;
}

}  // namespace

EvalReport normalized_loglik(const models::ModelSpec& spec, const models::ModelParams& params,
                             const std::vector<tasks::Task>& tasks, const std::string& mode) {
  return loglik_report(
      [&](const tasks::Task& t) { return models::forward(spec, params, t); }, tasks, mode);
}

EvalReport normalized_kl(const models::ModelSpec& spec, const models::ModelParams& params,
                         const std::vector<tasks::Task>& tasks, bool mean_field_joint,
                         const std::string& mode) {
  return kl_report([&](const tasks::Task& t) { return models::forward(spec, params, t); }, tasks,
                   mean_field_joint, mode);
}

models::Predictive trivial_predictive(const tasks::Task& task) {
  const std::size_t n = task.n_context(), m = task.n_target();
  if (n < 1) throw std::invalid_argument("trivial_predictive: empty context");
  double mu = 0.0;
  for (std::size_t i = 0; i < n; ++i) mu += task.context_y[i];
  mu /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    var += (task.context_y[i] - mu) * (task.context_y[i] - mu);
  }
  var /= static_cast<double>(n);
  const double sigma = std::max(std::sqrt(var), 1e-3);
  models::Predictive pred;
  pred.mean_field = true;
  pred.means = Tensor::full({m, 1}, mu);
  pred.stds = Tensor::full({m, 1}, sigma);
  return pred;
}

EvalReport trivial_loglik(const std::vector<tasks::Task>& tasks, const std::string& mode) {
  return loglik_report(trivial_predictive, tasks, mode);
}

EvalReport trivial_kl(const std::vector<tasks::Task>& tasks, bool mean_field_joint,
                      const std::string& mode) {
  return kl_report(trivial_predictive, tasks, mean_field_joint, mode);
}

EvalReport gp_reference_loglik(const std::vector<tasks::Task>& tasks, const std::string& mode) {
  if (tasks.empty()) throw std::invalid_argument("gp_reference_loglik: empty task set");
  EvalReport rep;
  rep.metric = "loglik";
  rep.mode = mode;
  rep.per_task.resize(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t i) {
    const tasks::Task& t = tasks[i];
    if (!t.has_reference) {
      throw std::invalid_argument("gp_reference_loglik: task carries no GP reference");
    }
    const gp::GPPosterior post =
        gp::posterior(t.reference_kernel, t.context_x, t.context_y, t.target_x, t.reference_noise);
    Tensor y({t.n_target()},
             std::vector<double>(t.target_y.data(), t.target_y.data() + t.n_target()));
    rep.per_task[i] =
        gp::mvn_logpdf(y, post.mean, post.noisy_cov()) / static_cast<double>(t.n_target());
  });
  rep.finalize();
  return rep;
}

CompareResult compare_models(const std::vector<double>& a_scores,
                             const std::vector<double>& b_scores) {
  if (a_scores.size() != b_scores.size()) {
    throw std::invalid_argument("compare_models: run counts differ");
  }
  const std::size_t n = a_scores.size();
  if (n < 2) throw std::invalid_argument("compare_models: need at least 2 paired runs");
  std::vector<double> d(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = b_scores[i] - a_scores[i];
    mean += d[i];
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double x : d) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n - 1);

  CompareResult res;
  if (var == 0.0) {
    res.degenerate = true;
    if (mean == 0.0) {
      res.p_value = 0.5;
      res.b_significantly_better = false;
    } else {
      res.p_value = mean > 0.0 ? 0.0 : 1.0;
      res.b_significantly_better = mean > 0.0;
      res.t_statistic = mean > 0.0 ? std::numeric_limits<double>::infinity()
                                   : -std::numeric_limits<double>::infinity();
    }
    return res;
  }
  res.t_statistic = mean / std::sqrt(var / static_cast<double>(n));
  res.p_value = 1.0 - stats::student_t_cdf(res.t_statistic, static_cast<double>(n - 1));
  res.b_significantly_better = res.p_value < 0.05;
  return res;
}

std::vector<std::size_t> best_model_set(const std::vector<std::vector<double>>& scores,
                                        bool higher_is_better) {
  if (scores.empty()) return {};
  const auto value = [&](std::size_t i) {
    double m = 0.0;
    for (double v : scores[i]) m += v;
    m /= static_cast<double>(scores[i].size());
    return higher_is_better ? m : -m;
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (value(i) > value(best)) best = i;
  }
  std::vector<std::size_t> bold = {best};
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i == best) continue;
    // Candidate i stays bold unless the best model is significantly better.
    const CompareResult best_beats_i = higher_is_better
                                           ? compare_models(scores[i], scores[best])
                                           : compare_models(scores[best], scores[i]);
    if (!best_beats_i.b_significantly_better) bold.push_back(i);
  }
  return bold;
}

std::vector<BenchRow> runtime_bench(const models::ModelSpec& spec,
                                    const models::ModelParams& params,
                                    const std::vector<std::size_t>& context_sizes,
                                    std::size_t target_size, std::size_t repeats,
                                    std::uint64_t seed) {
  if (target_size < 1 || repeats < 1) {
    throw std::invalid_argument("runtime_bench: sizes must be >= 1");
  }
  std::vector<BenchRow> rows;
  for (std::size_t n : context_sizes) {
    if (n < 1) throw std::invalid_argument("runtime_bench: context sizes must be >= 1");
    Rng rng(Rng::mix(seed, n));
    std::vector<double> times_ms(repeats);
    for (std::size_t r = 0; r < repeats; ++r) {
      tasks::Task task;
      task.context_x = Tensor({n, spec.d_x});
      task.context_y = Tensor({n, 1});
      task.target_x = Tensor({target_size, spec.d_x});
      task.target_y = Tensor({target_size, 1});
      for (std::size_t i = 0; i < task.context_x.size(); ++i)
        task.context_x[i] = rng.uniform(-2, 2);
      for (std::size_t i = 0; i < n; ++i) task.context_y[i] = rng.normal();
      for (std::size_t i = 0; i < task.target_x.size(); ++i) task.target_x[i] = rng.uniform(-2, 2);
      const auto t0 = std::chrono::steady_clock::now();
      const models::Predictive pred = models::forward(spec, params, task);
      const auto t1 = std::chrono::steady_clock::now();
      (void)pred;
      times_ms[r] = std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
    BenchRow row;
    row.n = n;
    for (double t : times_ms) row.mean_ms += t;
    row.mean_ms /= static_cast<double>(repeats);
    double var = 0.0;
    for (double t : times_ms) var += (t - row.mean_ms) * (t - row.mean_ms);
    row.std_ms = std::sqrt(var / static_cast<double>(repeats));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace rcnp::bench
