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

#include "rcnp/tasks.hpp"

#include <cmath>
#include <stdexcept>

#include "rcnp/gp.hpp"
#include "rcnp/parallel.hpp"

namespace rcnp::tasks {

const char* family_name(Family f) {
  switch (f) {
    case Family::kEQ:
      return "eq";
    case Family::kMatern52:
      return "matern52";
    case Family::kWeaklyPeriodic:
      return "weakly-periodic";
    case Family::kSawtooth:
      return "sawtooth";
    case Family::kMixture:
      return "mixture";
    case Family::kRegimeI:
      return "regime-i";
    case Family::kRegimeII:
      return "regime-ii";
    case Family::kRegimeIII:
      return "regime-iii";
    case Family::kRegimeIV:
      return "regime-iv";
  }
  return "?";
}

namespace {

bool is_regime(Family f) {
  return f == Family::kRegimeI || f == Family::kRegimeII || f == Family::kRegimeIII ||
         f == Family::kRegimeIV;
}

gp::KernelRegime regime_of(Family f) {
  switch (f) {
    case Family::kRegimeI:
      return gp::KernelRegime::kMaternFixed;
    case Family::kRegimeII:
      return gp::KernelRegime::kMaternSampled;
    case Family::kRegimeIII:
      return gp::KernelRegime::kKernelSingle;
    default:
      return gp::KernelRegime::kKernelMultiple;
  }
}

}  // namespace

GeneratorHyperparams default_hyperparams(Family family, std::size_t d_x) {
  if (d_x < 1) throw std::invalid_argument("default_hyperparams: d_x must be >= 1");
  const double s = std::sqrt(static_cast<double>(d_x));
  GeneratorHyperparams h;
  h.lengthscale = s;
  h.decay_lengthscale = 2.0 * s;
  h.periodic_lengthscale = 4.0 * s;
  h.period = s;
  h.freq_lo = 1.0 / (2.0 * s);
  h.freq_hi = 1.0 / s;
  const bool gp_family = family == Family::kEQ || family == Family::kMatern52 ||
                         family == Family::kWeaklyPeriodic || is_regime(family);
  h.noise_variance = gp_family ? 0.05 : 0.0;
  return h;
}

gp::KernelSpec family_kernel(Family f, std::size_t d_x) {
  const GeneratorHyperparams h = default_hyperparams(f, d_x);
  switch (f) {
    case Family::kEQ:
      return gp::KernelSpec::eq(h.lengthscale);
    case Family::kMatern52:
      return gp::KernelSpec::matern52(h.lengthscale);
    case Family::kWeaklyPeriodic:
      return gp::KernelSpec::weakly_periodic(h.decay_lengthscale, h.periodic_lengthscale,
                                             h.period);
    default:
      throw std::invalid_argument("family_kernel: not a GP family");
  }
}

TaskConfig TaskConfig::defaults(Family family, std::size_t d_x) {
  TaskConfig cfg;
  cfg.family = family;
  cfg.d_x = d_x;
  cfg.noise_variance = default_hyperparams(family, d_x).noise_variance;
  if (family == Family::kSawtooth || family == Family::kMixture) {
    cfg.n_context_max = d_x == 1 ? 30 : 50 * d_x;
    cfg.n_target = 100 * d_x;
  } else {
    cfg.n_context_max = 30 * d_x;
    cfg.n_target = 50 * d_x;
  }
  return cfg;
}

void TaskConfig::validate() const {
  if (d_x < 1) throw std::invalid_argument("TaskConfig: d_x must be >= 1");
  if (n_context_min < 1 || n_context_min > n_context_max) {
    throw std::invalid_argument("TaskConfig: empty context count range");
  }
  if (n_target < 1) throw std::invalid_argument("TaskConfig: need at least one target");
  if (noise_variance < 0.0) throw std::invalid_argument("TaskConfig: negative noise");
}

double SawtoothFn::operator()(const double* x, std::size_t d) const {
  double dot = 0.0;
  for (std::size_t j = 0; j < d; ++j) dot += x[j] * direction[j];
  const double v = std::fmod(omega * dot + phase, 1.0);
  return v < 0.0 ? v + 1.0 : v;
}

SawtoothFn sample_sawtooth(std::size_t d_x, double freq_lo, double freq_hi, Rng& rng) {
  SawtoothFn f;
  f.omega = rng.uniform(freq_lo, freq_hi);
  f.direction = Tensor({d_x});
  double norm = 0.0;
  do {
    norm = 0.0;
    for (std::size_t j = 0; j < d_x; ++j) {
      f.direction[j] = rng.normal();
      norm += f.direction[j] * f.direction[j];
    }
    norm = std::sqrt(norm);
  } while (norm < 1e-12);
  for (std::size_t j = 0; j < d_x; ++j) f.direction[j] /= norm;
  f.phase = rng.uniform();
  return f;
}

Task generate_task(const TaskConfig& cfg, RangeMode mode, Rng& rng) {
  cfg.validate();
  const double lo = mode == RangeMode::kInterpolation ? -2.0 : 2.0;
  const double hi = mode == RangeMode::kInterpolation ? 2.0 : 6.0;
  const std::size_t d = cfg.d_x;
  const GeneratorHyperparams h = default_hyperparams(cfg.family, d);

  // Draw order is fixed: context count, inputs, family pick (mixture only),
  // then function values. The range only affects the affine input map, so
  // identical seeds give translated input sets across modes.
  const std::size_t n = static_cast<std::size_t>(
      rng.uniform_int(static_cast<std::int64_t>(cfg.n_context_min),
                      static_cast<std::int64_t>(cfg.n_context_max)));
  const std::size_t m = cfg.n_target;
  Tensor inputs({n + m, d});
  for (std::size_t i = 0; i < inputs.size(); ++i) inputs[i] = lo + (hi - lo) * rng.uniform();

  Family effective = cfg.family;
  if (cfg.family == Family::kMixture) {
    const Family choices[4] = {Family::kEQ, Family::kMatern52, Family::kWeaklyPeriodic,
                               Family::kSawtooth};
    effective = choices[rng.uniform_int(0, 3)];
  }

  Task task;
  task.generator = family_name(cfg.family);
  if (cfg.family == Family::kMixture) {
    task.generator += std::string("(") + family_name(effective) + ")";
  }

  Tensor y({n + m});
  if (effective == Family::kSawtooth) {
    const SawtoothFn f = sample_sawtooth(d, h.freq_lo, h.freq_hi, rng);
    for (std::size_t i = 0; i < n + m; ++i) y[i] = f(inputs.data() + i * d, d);
  } else {
    const gp::KernelSpec kernel = is_regime(effective)
                                      ? gp::sample_kernel_regime(regime_of(effective), d, rng)
                                      : family_kernel(effective, d);
    y = gp::sample_prior(kernel, inputs, cfg.noise_variance, rng);
    if (cfg.family != Family::kMixture) {
      task.has_reference = true;
      task.reference_kernel = kernel;
      task.reference_noise = cfg.noise_variance;
    }
  }

  task.context_x = Tensor({n, d});
  task.context_y = Tensor({n, 1});
  task.target_x = Tensor({m, d});
  task.target_y = Tensor({m, 1});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) task.context_x.at(i, j) = inputs.at(i, j);
    task.context_y[i] = y[i];
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < d; ++j) task.target_x.at(i, j) = inputs.at(n + i, j);
    task.target_y[i] = y[n + i];
  }
  return task;
}

std::vector<Task> generate_epoch(const TaskConfig& cfg, std::size_t count, RangeMode mode,
                                 std::uint64_t base_seed) {
  if (count < 1) throw std::invalid_argument("generate_epoch: count must be >= 1");
  std::vector<Task> out(count);
  parallel_for(count, [&](std::size_t i) {
    const std::uint64_t seed = Rng::mix(base_seed, i);
    Rng rng(seed);
    out[i] = generate_task(cfg, mode, rng);
    out[i].seed = seed;
  });
  return out;
}

Task translate_task(const Task& task, const Tensor& offset) {
  if (offset.size() != task.d_x()) {
    throw std::invalid_argument("translate_task: offset dimension mismatch");
  }
  Task t = task;
  for (std::size_t i = 0; i < t.context_x.dim(0); ++i)
    for (std::size_t j = 0; j < t.context_x.dim(1); ++j) t.context_x.at(i, j) += offset[j];
  for (std::size_t i = 0; i < t.target_x.dim(0); ++i)
    for (std::size_t j = 0; j < t.target_x.dim(1); ++j) t.target_x.at(i, j) += offset[j];
  return t;
}

}  // namespace rcnp::tasks
