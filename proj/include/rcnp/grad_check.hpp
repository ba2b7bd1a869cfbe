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

#include <functional>

#include "rcnp/tensor.hpp"

namespace rcnp {

/// A scalar function with an analytic gradient.
struct ScalarFn {
  std::function<double(const Tensor&)> value;
  std::function<Tensor(const Tensor&)> grad;
};

/// Compare the analytic gradient against central finite differences at
/// `point`. Returns max over coordinates of
///   |analytic - numeric| / max(1, |analytic|).
double grad_check(const ScalarFn& f, const Tensor& point, double h = 1e-5);

}  // namespace rcnp
