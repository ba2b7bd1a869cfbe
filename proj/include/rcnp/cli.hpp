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

#include <ostream>
#include <string>
#include <vector>

namespace rcnp::cli {

/// Exit codes: 0 success, 1 runtime failure, 2 usage error.
int run(int argc, const char* const* argv);

/// Property suites behind `proptest`; `out` receives one line per property.
/// Returns the number of failed properties. `negate_control` flips the CNP
/// translation check to demonstrate that the suite detects
/// non-equivariant models (the run is then expected to fail).
int run_property_suites(const std::string& suite, std::size_t trials, std::uint64_t seed,
                        bool negate_control, std::ostream& out);

}  // namespace rcnp::cli
