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
#include "rcnp/trainer.hpp"

namespace rcnp::cli {

/// Everything needed to reload and reuse a trained model. On disk:
///   magic "RCNP" | version u32 LE | header length u32 LE | header bytes
///   (UTF-8 "key=value\n" lines) | parameter blocks until EOF, each
///   name length u32 LE | name | rank u32 LE | dims u64 LE | data f64 LE.
struct Checkpoint {
  models::ModelSpec spec;
  tasks::Family family = tasks::Family::kEQ;
  train::TrainConfig train_cfg;
  double best_val_score = 0.0;
  std::size_t best_epoch = 0;
  models::ModelParams params;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

/// Task datasets: magic "RCTK" | version u32 LE | count u64 LE | tasks.
/// Each task: seed u64 | generator string | has_reference u8
/// [| kernel tree | noise f64] | the four tensors (rank u32, dims u64,
/// data f64), all little-endian.
void save_tasks(const std::string& path, const std::vector<tasks::Task>& tasks);
std::vector<tasks::Task> load_tasks(const std::string& path);

bool parse_family(const std::string& s, tasks::Family& out);

}  // namespace rcnp::cli
