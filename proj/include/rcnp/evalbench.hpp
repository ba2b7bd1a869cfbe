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

#include <string>
#include <vector>

#include "rcnp/models.hpp"
#include "rcnp/tasks.hpp"

namespace rcnp::bench {

/// Per-task metric values plus summary statistics (std uses the population
/// convention so a single task reports 0).
struct EvalReport {
  std::vector<double> per_task;
  double mean = 0.0;
  double stddev = 0.0;
  std::string metric;  // "loglik" or "kl"
  std::string mode;    // caller-supplied tag, e.g. "int"/"ooid"

  void finalize();
};

/// Per-task joint log-likelihood / M.
EvalReport normalized_loglik(const models::ModelSpec& spec, const models::ModelParams& params,
                             const std::vector<tasks::Task>& tasks, const std::string& mode = "");

/// Per-task KL(model predictive || GP noisy posterior predictive) / M.
/// Mean-field predictives default to summed per-target marginal KLs;
/// `mean_field_joint` switches them to a joint diagonal-vs-full KL.
/// Low-rank predictives always use the joint KL. Every task must carry its
/// generating kernel.
EvalReport normalized_kl(const models::ModelSpec& spec, const models::ModelParams& params,
                         const std::vector<tasks::Task>& tasks, bool mean_field_joint = false,
                         const std::string& mode = "");

/// Mean-field predictive from the context-output moments: mu = mean(ctx_y),
/// sigma = population std(ctx_y), floored at 1e-3 (a single context point
/// gives the floor).
models::Predictive trivial_predictive(const tasks::Task& task);

EvalReport trivial_loglik(const std::vector<tasks::Task>& tasks, const std::string& mode = "");
EvalReport trivial_kl(const std::vector<tasks::Task>& tasks, bool mean_field_joint = false,
                      const std::string& mode = "");

/// Normalized joint log-likelihood of the exact GP noisy posterior itself
/// (the Bayes-optimal prediction map on GP tasks).
EvalReport gp_reference_loglik(const std::vector<tasks::Task>& tasks,
                               const std::string& mode = "");

/// One-sided paired t-test. Verdict semantics: `b_significantly_better`
/// means the alternative "B has higher mean than A" was accepted at the
/// 0.05 level. Zero-variance branches: all differences zero -> not
/// significant (p = 0.5); all equal and nonzero -> the sign decides.
struct CompareResult {
  double t_statistic = 0.0;
  double p_value = 0.5;
  bool b_significantly_better = false;
  bool degenerate = false;  // zero-variance branch taken
};

CompareResult compare_models(const std::vector<double>& a_scores,
                             const std::vector<double>& b_scores);

/// Indices of models tied with the best by the paper's bolding rule: the
/// best-mean model plus every model not significantly worse than it.
/// `scores[i]` holds model i's per-run values, paired by position.
std::vector<std::size_t> best_model_set(const std::vector<std::vector<double>>& scores,
                                        bool higher_is_better);

struct BenchRow {
  std::size_t n = 0;
  double mean_ms = 0.0;
  double std_ms = 0.0;
};

/// Forward-pass wall time per context size over `repeats` random tasks each
/// (monotonic clock; d_x = 1 inputs).
std::vector<BenchRow> runtime_bench(const models::ModelSpec& spec,
                                    const models::ModelParams& params,
                                    const std::vector<std::size_t>& context_sizes,
                                    std::size_t target_size, std::size_t repeats,
                                    std::uint64_t seed);

}  // namespace rcnp::bench
