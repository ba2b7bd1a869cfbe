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

#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include "rcnp/models.hpp"
#include "rcnp/tasks.hpp"

namespace rcnp::train {

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t tasks_per_epoch = 1024;
  std::size_t batch_size = 16;
  double learning_rate = 3e-4;
  std::size_t validation_tasks = 256;
  std::uint64_t data_seed = 1;
  std::uint64_t validation_seed = 2;
  std::uint64_t init_seed = 3;
  bool normalize_by_targets = true;
  /// Global-norm gradient clip; 0 disables. The softplus std head starts
  /// collapsed under the uniform init, and the resulting early z^2 spikes
  /// would otherwise inflate Adam's second moments enough to stall the
  /// whole desk-scale budget.
  double grad_clip_norm = 10.0;

  void validate() const;
};

struct EpochStats {
  double train_loss = 0.0;
  double val_score = 0.0;
};

struct TrainRecord {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;  // index into `epochs`
  double best_val_score = 0.0;
};

/// Lower confidence bound mean - 1.96*std/sqrt(N) over a set of scores.
/// std is the sample standard deviation (N-1 denominator; zero when N < 2).
double confidence_score(const std::vector<double>& values);

/// Per-task normalized log-likelihoods summarized by confidence_score.
double validation_score(const models::ModelSpec& spec, const models::ModelParams& params,
                        const std::vector<tasks::Task>& validation_set);

struct TrainResult {
  models::ModelParams params;  // parameters of the best-scoring epoch
  TrainRecord record;
};

/// Minibatch Adam on freshly generated tasks, one validation pass per epoch
/// against a fixed pre-generated set; returns the best-scoring parameters.
/// Deterministic in the config's seed triple. If `log` is nonnull, writes a
/// CSV ("epoch,train_loss,val_score", one row per epoch). `progress`, if
/// set, is called after each epoch.
TrainResult train(const models::ModelSpec& spec, const tasks::TaskConfig& task_cfg,
                  const TrainConfig& cfg, std::ostream* log = nullptr,
                  const std::function<void(std::size_t, const EpochStats&)>& progress = {});

}  // namespace rcnp::train
