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

#include "rcnp/tensor.hpp"

namespace rcnp {

/// Adam accumulators, one pair per parameter tensor.
struct AdamState {
  std::vector<Tensor> m;  // first moments
  std::vector<Tensor> v;  // second moments
  long step = 0;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState init(const std::vector<Tensor>& params, double lr = 3e-4);
};

/// One Adam update with bias correction, in place. `names` (optional,
/// parallel to params) is used in the non-finite-gradient error message.
void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamState& state,
               const std::vector<std::string>& names = {});

}  // namespace rcnp
