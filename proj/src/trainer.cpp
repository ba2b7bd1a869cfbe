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

#include "rcnp/trainer.hpp"

#include <cmath>
#include <stdexcept>

#include "rcnp/adam.hpp"
#include "rcnp/parallel.hpp"

namespace rcnp::train {

void TrainConfig::validate() const {
  if (epochs < 1 || tasks_per_epoch < 1 || batch_size < 1 || validation_tasks < 1) {
    throw std::invalid_argument("TrainConfig: all counts must be >= 1");
  }
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning rate must be > 0");
}

double confidence_score(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("confidence_score: no values");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  if (values.size() > 1) {
    for (double v : values) var += (v - mean) * (v - mean);
    var /= (n - 1.0);
  }
  return mean - 1.96 * std::sqrt(var) / std::sqrt(n);
}

double validation_score(const models::ModelSpec& spec, const models::ModelParams& params,
                        const std::vector<tasks::Task>& validation_set) {
  if (validation_set.empty()) throw std::invalid_argument("validation_score: empty set");
  std::vector<double> scores(validation_set.size());
  parallel_for(validation_set.size(), [&](std::size_t i) {
    const models::Predictive pred = models::forward(spec, params, validation_set[i]);
    scores[i] = models::loglik(pred, validation_set[i].target_y) /
                static_cast<double>(validation_set[i].n_target());
  });
  return confidence_score(scores);
}

TrainResult train(const models::ModelSpec& spec, const tasks::TaskConfig& task_cfg,
                  const TrainConfig& cfg, std::ostream* log,
                  const std::function<void(std::size_t, const EpochStats&)>& progress) {
  spec.validate();
  task_cfg.validate();
  cfg.validate();

  models::ModelParams params = models::init(spec, cfg.init_seed);
  AdamState adam = AdamState::init(params.tensors, cfg.learning_rate);
  const std::vector<tasks::Task> validation_set = tasks::generate_epoch(
      task_cfg, cfg.validation_tasks, tasks::RangeMode::kInterpolation, cfg.validation_seed);

  TrainResult result;
  result.params = params;
  if (log) (*log) << "epoch,train_loss,val_score\n";

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<tasks::Task> epoch_tasks =
        tasks::generate_epoch(task_cfg, cfg.tasks_per_epoch, tasks::RangeMode::kInterpolation,
                              Rng::mix(cfg.data_seed, epoch));
    double loss_sum = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < epoch_tasks.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(start + cfg.batch_size, epoch_tasks.size());
      const std::vector<tasks::Task> batch(epoch_tasks.begin() + start,
                                           epoch_tasks.begin() + end);
      models::Objective obj =
          models::nll_objective(spec, params, batch, true, cfg.normalize_by_targets);
      if (!std::isfinite(obj.loss)) {
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(n_batches));
      }
      if (cfg.grad_clip_norm > 0.0) {
        double sq = 0.0;
        for (const Tensor& g : obj.grads) {
          for (std::size_t i = 0; i < g.size(); ++i) sq += g[i] * g[i];
        }
        const double norm = std::sqrt(sq);
        if (norm > cfg.grad_clip_norm) {
          const double scale = cfg.grad_clip_norm / norm;
          for (Tensor& g : obj.grads) {
            for (std::size_t i = 0; i < g.size(); ++i) g[i] *= scale;
          }
        }
      }
      adam_step(params.tensors, obj.grads, adam, params.names);
      loss_sum += obj.loss;
      ++n_batches;
    }

    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(n_batches);
    stats.val_score = validation_score(spec, params, validation_set);
    result.record.epochs.push_back(stats);
    if (log) {
      (*log) << epoch << "," << stats.train_loss << "," << stats.val_score << "\n";
      log->flush();
    }
    if (progress) progress(epoch, stats);

    if (epoch == 0 || stats.val_score > result.record.best_val_score) {
      result.record.best_val_score = stats.val_score;
      result.record.best_epoch = epoch;
      result.params = params;
    }
  }
  return result;
}

}  // namespace rcnp::train
