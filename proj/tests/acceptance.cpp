// Acceptance suite: one pass/fail line per criterion. Training runs are
// cached as checkpoints under --cache-dir so later criteria (and re-runs)
// can reuse them. Run a subset with --criterion 1,2,8.
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <vector>

#include "rcnp/adam.hpp"
#include "rcnp/bayesopt.hpp"
#include "rcnp/checkpoint.hpp"
#include "rcnp/evalbench.hpp"
#include "rcnp/gp.hpp"
#include "rcnp/grad_check.hpp"
#include "rcnp/models.hpp"
#include "rcnp/parallel.hpp"
#include "rcnp/tasks.hpp"
#include "rcnp/trainer.hpp"
#include "support/model_helpers.hpp"
#include "support/oracles.hpp"

using namespace rcnp;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Ctx {
  std::string cache_dir;
  std::map<std::string, cli::Checkpoint> loaded;
};

struct Check {
  bool ok = true;
  std::ostringstream notes;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      notes << "    FAILED: " << what << "\n";
    } else {
      notes << "    ok: " << what << "\n";
    }
  }
};

models::ModelSpec desk_spec(models::Variant v, std::size_t d_x) {
  models::ModelSpec spec;
  spec.variant = v;
  spec.head = spec.is_gaussian() ? models::Head::kLowRankLinear : models::Head::kMeanField;
  spec.comparison = spec.is_full() ? encoding::Comparison::kDistance
                                   : encoding::Comparison::kDifference;
  spec.d_x = d_x;
  return spec;  // widths keep the desk defaults (128, 3x128, 6x128, 16)
}

train::TrainConfig desk_train_cfg(std::uint64_t seed_base) {
  train::TrainConfig cfg;  // desk defaults: 20 epochs x 1024, batch 16, lr 3e-4, val 256
  cfg.data_seed = seed_base;
  cfg.validation_seed = Rng::mix(seed_base, 0x5eed0001);
  cfg.init_seed = Rng::mix(seed_base, 0x5eed0002);
  return cfg;
}

const cli::Checkpoint& get_or_train(Ctx& ctx, const std::string& tag, models::Variant v,
                                    tasks::Family family, std::size_t d_x,
                                    std::uint64_t seed_base) {
  auto it = ctx.loaded.find(tag);
  if (it != ctx.loaded.end()) return it->second;

  const std::string path = ctx.cache_dir + "/" + tag + ".rcnp";
  if (fs::exists(path)) {
    std::cerr << "  [" << tag << "] loading cached checkpoint\n";
    return ctx.loaded.emplace(tag, cli::load_checkpoint(path)).first->second;
  }

  cli::Checkpoint ck;
  ck.spec = desk_spec(v, d_x);
  ck.family = family;
  ck.train_cfg = desk_train_cfg(seed_base);
  std::cerr << "  [" << tag << "] training " << models::variant_name(v) << " on "
            << tasks::family_name(family) << " d_x=" << d_x << " (desk scale)\n";
  const auto t0 = Clock::now();
  const tasks::TaskConfig task_cfg = tasks::TaskConfig::defaults(family, d_x);
  const train::TrainResult res =
      train::train(ck.spec, task_cfg, ck.train_cfg, nullptr,
                   [&](std::size_t e, const train::EpochStats& s) {
                     std::cerr << "    epoch " << e << ": train " << s.train_loss << " val "
                               << s.val_score << "\n";
                   });
  ck.params = res.params;
  ck.best_val_score = res.record.best_val_score;
  ck.best_epoch = res.record.best_epoch;
  cli::save_checkpoint(path, ck);
  std::cerr << "  [" << tag << "] trained in "
            << std::chrono::duration<double>(Clock::now() - t0).count() / 60.0 << " min\n";
  return ctx.loaded.emplace(tag, std::move(ck)).first->second;
}

// ---------------------------------------------------------------------------
// 1. Equivariance suite

bool criterion1(Ctx&) {
  Check c;
  Rng rng(0xACC1);
  const int trials = 50;
  for (std::size_t d_x : {1u, 2u, 3u}) {
    double worst_diag = 0.0, worst_full = 0.0, weakest_control = 1e300;
    for (int t = 0; t < trials; ++t) {
      const std::size_t n = 3 + rng.uniform_int(0, 7);
      const std::size_t m = 3 + rng.uniform_int(0, 5);
      const tasks::Task task = testsupport::random_task(n, m, d_x, rng);

      // translation with ||c|| <= 10
      Tensor c_vec({d_x});
      double norm = 0.0;
      for (std::size_t j = 0; j < d_x; ++j) {
        c_vec[j] = rng.normal();
        norm += c_vec[j] * c_vec[j];
      }
      const double mag = rng.uniform(0.0, 10.0) / std::sqrt(std::max(norm, 1e-12));
      for (std::size_t j = 0; j < d_x; ++j) c_vec[j] *= mag;

      for (models::Variant v : {models::Variant::kRCNP, models::Variant::kRGNP}) {
        const models::ModelSpec spec = desk_spec(v, d_x);
        const models::ModelParams params = models::init(spec, rng.next_u64());
        const double dev = testsupport::predictive_deviation(
            models::forward(spec, params, task),
            models::forward(spec, params, tasks::translate_task(task, c_vec)));
        worst_diag = std::max(worst_diag, dev);
      }

      const Tensor Q = testsupport::random_rotation(d_x, rng);
      for (models::Variant v : {models::Variant::kFullRCNP, models::Variant::kFullRGNP}) {
        const models::ModelSpec spec = desk_spec(v, d_x);
        const models::ModelParams params = models::init(spec, rng.next_u64());
        const double dev = testsupport::predictive_deviation(
            models::forward(spec, params, task),
            models::forward(spec, params, testsupport::rigid_transform_task(task, Q, c_vec)));
        worst_full = std::max(worst_full, dev);
      }

      {
        const models::ModelSpec spec = desk_spec(models::Variant::kCNP, d_x);
        const models::ModelParams params = models::init(spec, rng.next_u64());
        const double dev = testsupport::predictive_deviation(
            models::forward(spec, params, task),
            models::forward(spec, params, tasks::translate_task(task, Tensor::full({d_x}, 4.0))));
        weakest_control = std::min(weakest_control, dev);
      }
    }
    std::ostringstream tag;
    tag << "d_x=" << d_x << ": translation dev " << worst_diag << ", rigid dev " << worst_full
        << ", CNP control dev " << weakest_control;
    c.expect(worst_diag < 1e-6 && worst_full < 1e-6 && weakest_control > 1e-3, tag.str());
  }
  std::cerr << c.notes.str();
  return c.ok;
}

// ---------------------------------------------------------------------------
// 2. Gradient suite

bool criterion2(Ctx&) {
  Check c;
  Rng rng(0xACC2);
  for (models::Variant v : testsupport::all_variants()) {
    const models::ModelSpec spec = testsupport::small_spec(
        v, testsupport::default_head(v, v == models::Variant::kGNP), 1, 8, 2);
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
      models::ModelParams params;
      tasks::Task task;
      models::FdSafety safety;
      do {
        params = models::init(spec, rng.next_u64());
        task = testsupport::random_task(3, 2, 1, rng);
        safety = models::fd_safety(spec, params, task);
      } while (!safety.safe());
      const models::Objective obj = models::nll_objective(spec, params, {task}, true);
      Tensor flat({params.total_size()});
      std::size_t off = 0;
      for (const Tensor& g : obj.grads) {
        for (std::size_t i = 0; i < g.size(); ++i) flat[off + i] = g[i];
        off += g.size();
      }
      const ScalarFn f{[&](const Tensor& theta) {
                         models::ModelParams p2 = params;
                         p2.unflatten(theta);
                         return models::nll_objective(spec, p2, {task}, false).loss;
                       },
                       [&](const Tensor&) { return flat; }};
      worst = std::max(worst, grad_check(f, params.flatten()));
    }
    std::ostringstream tag;
    tag << models::variant_name(v) << ": max rel err " << worst << " over 10 tasks";
    c.expect(worst < 1e-4, tag.str());
  }
  std::cerr << c.notes.str();
  return c.ok;
}

// ---------------------------------------------------------------------------
// 3. OOID generalization (Matern-5/2, d_x=1, desk scale)

constexpr std::uint64_t kOoidSeedBase = 301;
constexpr std::uint64_t kOoidEvalSeed = 42;

bool criterion3(Ctx& ctx) {
  Check c;
  const cli::Checkpoint& rcnp =
      get_or_train(ctx, "c3_rcnp_matern1", models::Variant::kRCNP, tasks::Family::kMatern52, 1,
                   kOoidSeedBase);
  const cli::Checkpoint& cnp =
      get_or_train(ctx, "c3_cnp_matern1", models::Variant::kCNP, tasks::Family::kMatern52, 1,
                   kOoidSeedBase);

  const tasks::TaskConfig task_cfg = tasks::TaskConfig::defaults(tasks::Family::kMatern52, 1);
  const auto int_set =
      tasks::generate_epoch(task_cfg, 256, tasks::RangeMode::kInterpolation, kOoidEvalSeed);
  const auto ooid_set = tasks::generate_epoch(task_cfg, 256,
                                              tasks::RangeMode::kOutOfInputDistribution,
                                              kOoidEvalSeed);

  const double rcnp_int = bench::normalized_loglik(rcnp.spec, rcnp.params, int_set, "int").mean;
  const double rcnp_ooid =
      bench::normalized_loglik(rcnp.spec, rcnp.params, ooid_set, "ooid").mean;
  const double cnp_int = bench::normalized_loglik(cnp.spec, cnp.params, int_set, "int").mean;
  const double cnp_ooid = bench::normalized_loglik(cnp.spec, cnp.params, ooid_set, "ooid").mean;

  {
    std::ostringstream tag;
    tag << "RCNP INT " << rcnp_int << " vs OOID " << rcnp_ooid << " (|diff| "
        << std::abs(rcnp_ooid - rcnp_int) << " <= 0.05)";
    c.expect(std::abs(rcnp_ooid - rcnp_int) <= 0.05, tag.str());
  }
  {
    std::ostringstream tag;
    tag << "CNP INT " << cnp_int << " vs OOID " << cnp_ooid << " (degradation "
        << cnp_int - cnp_ooid << " >= 0.3)";
    c.expect(cnp_int - cnp_ooid >= 0.3, tag.str());
  }
  std::cerr << c.notes.str();
  return c.ok;
}

// ---------------------------------------------------------------------------
// 4. Exact-translation parity for a trained RCNP

bool criterion4(Ctx& ctx) {
  Check c;
  const cli::Checkpoint& rcnp =
      get_or_train(ctx, "c3_rcnp_matern1", models::Variant::kRCNP, tasks::Family::kMatern52, 1,
                   kOoidSeedBase);
  const tasks::TaskConfig task_cfg = tasks::TaskConfig::defaults(tasks::Family::kMatern52, 1);
  const auto int_set =
      tasks::generate_epoch(task_cfg, 256, tasks::RangeMode::kInterpolation, kOoidEvalSeed);
  double mean_abs = 0.0;
  for (const tasks::Task& task : int_set) {
    const tasks::Task shifted = tasks::translate_task(task, Tensor::full({1}, 4.0));
    const double a =
        models::loglik(models::forward(rcnp.spec, rcnp.params, task), task.target_y) /
        static_cast<double>(task.n_target());
    const double b =
        models::loglik(models::forward(rcnp.spec, rcnp.params, shifted), shifted.target_y) /
        static_cast<double>(task.n_target());
    mean_abs += std::abs(a - b);
  }
  mean_abs /= static_cast<double>(int_set.size());
  std::ostringstream tag;
  tag << "mean |loglik(task) - loglik(task+4)| = " << mean_abs << " <= 1e-5";
  c.expect(mean_abs <= 1e-5, tag.str());
  std::cerr << c.notes.str();
  return c.ok;
}

// ---------------------------------------------------------------------------
// 5. KL ordering on EQ d_x=1 (3 paired seeds)

constexpr std::uint64_t kKlEvalSeed = 43;

bool criterion5(Ctx& ctx) {
  Check c;
  const tasks::TaskConfig task_cfg = tasks::TaskConfig::defaults(tasks::Family::kEQ, 1);
  const auto eval_set =
      tasks::generate_epoch(task_cfg, 256, tasks::RangeMode::kInterpolation, kKlEvalSeed);

  const std::uint64_t seed_bases[3] = {501, 502, 503};
  std::vector<double> kl_rgnp, kl_rcnp, kl_cnp, kl_trivial;
  const double trivial_kl_value = bench::trivial_kl(eval_set).mean;
  const double gp_ref = bench::gp_reference_loglik(eval_set).mean;

  for (int s = 0; s < 3; ++s) {
    const std::string suffix = "_s" + std::to_string(s + 1);
    const cli::Checkpoint& rgnp = get_or_train(ctx, "c5_rgnp_eq1" + suffix,
                                               models::Variant::kRGNP, tasks::Family::kEQ, 1,
                                               seed_bases[s]);
    const cli::Checkpoint& rcnp = get_or_train(ctx, "c5_rcnp_eq1" + suffix,
                                               models::Variant::kRCNP, tasks::Family::kEQ, 1,
                                               seed_bases[s]);
    const cli::Checkpoint& cnp = get_or_train(ctx, "c5_cnp_eq1" + suffix, models::Variant::kCNP,
                                              tasks::Family::kEQ, 1, seed_bases[s]);
    kl_rgnp.push_back(bench::normalized_kl(rgnp.spec, rgnp.params, eval_set).mean);
    kl_rcnp.push_back(bench::normalized_kl(rcnp.spec, rcnp.params, eval_set).mean);
    kl_cnp.push_back(bench::normalized_kl(cnp.spec, cnp.params, eval_set).mean);
    kl_trivial.push_back(trivial_kl_value);
    std::cerr << "  seed " << seed_bases[s] << ": KL rgnp " << kl_rgnp.back() << ", rcnp "
              << kl_rcnp.back() << ", cnp " << kl_cnp.back() << ", trivial "
              << trivial_kl_value << "\n";

    // Bayes bound: no trained model beats the exact posterior's loglik
    for (const cli::Checkpoint* ck : {&rgnp, &rcnp, &cnp}) {
      const double ll = bench::normalized_loglik(ck->spec, ck->params, eval_set).mean;
      std::ostringstream tag;
      tag << models::variant_name(ck->spec.variant) << " loglik " << ll
          << " <= GP reference " << gp_ref << " + 1e-6";
      c.expect(ll <= gp_ref + 1e-6, tag.str());
    }
  }

  auto mean3 = [](const std::vector<double>& v) { return (v[0] + v[1] + v[2]) / 3.0; };
  const double m_rgnp = mean3(kl_rgnp), m_rcnp = mean3(kl_rcnp), m_cnp = mean3(kl_cnp);

  {
    std::ostringstream tag;
    tag << "KL(RGNP) " << m_rgnp << " < KL(RCNP) " << m_rcnp;
    c.expect(m_rgnp < m_rcnp, tag.str());
  }
  {
    std::ostringstream tag;
    tag << "KL(RCNP) " << m_rcnp << " < KL(Trivial) " << trivial_kl_value;
    c.expect(m_rcnp < trivial_kl_value, tag.str());
  }
  {
    std::ostringstream tag;
    tag << "KL(RCNP) " << m_rcnp << " < KL(CNP) " << m_cnp << " + 0.05";
    c.expect(m_rcnp < m_cnp + 0.05, tag.str());
  }

  // Paired one-sided t-tests (lower KL is better); significance where the
  // separation permits with 3 paired runs.
  const bench::CompareResult rgnp_vs_trivial = bench::compare_models(kl_rgnp, kl_trivial);
  const bench::CompareResult rgnp_vs_rcnp = bench::compare_models(kl_rgnp, kl_rcnp);
  const bench::CompareResult rcnp_vs_cnp = bench::compare_models(kl_rcnp, kl_cnp);
  std::cerr << "  t-tests (H1: second argument has higher KL): rgnp<trivial p="
            << rgnp_vs_trivial.p_value << ", rgnp<rcnp p=" << rgnp_vs_rcnp.p_value
            << ", rcnp<cnp p=" << rcnp_vs_cnp.p_value << "\n";
  {
    std::ostringstream tag;
    tag << "RGNP significantly better than Trivial (p=" << rgnp_vs_trivial.p_value << ")";
    c.expect(rgnp_vs_trivial.b_significantly_better, tag.str());
  }

  std::cerr << c.notes.str();
  return c.ok;
}

// ---------------------------------------------------------------------------
// 6. Complexity bench

bool criterion6(Ctx&) {
  Check c;
  const std::vector<std::size_t> sizes = {10, 20, 40, 80};
  std::map<std::string, std::pair<double, double>> ratio_bounds = {
      {"fullrcnp", {8.0, 32.0}}, {"rcnp", {2.0, 8.0}}, {"cnp", {0.5, 3.0}}};
  for (const auto& [name, bounds] : ratio_bounds) {
    models::Variant v;
    models::parse_variant(name, v);
    const models::ModelSpec spec = desk_spec(v, 1);
    const models::ModelParams params = models::init(spec, 2026);
    const auto rows = bench::runtime_bench(spec, params, sizes, 20, 50, 99);
    double t20 = 0.0, t80 = 0.0;
    for (const bench::BenchRow& r : rows) {
      std::cerr << "  " << name << " N=" << r.n << ": " << r.mean_ms << " ms (+-" << r.std_ms
                << ")\n";
      if (r.n == 20) t20 = r.mean_ms;
      if (r.n == 80) t80 = r.mean_ms;
    }
    const double ratio = t80 / t20;
    std::ostringstream tag;
    tag << name << " time(80)/time(20) = " << ratio << " in [" << bounds.first << ", "
        << bounds.second << "]";
    c.expect(ratio >= bounds.first && ratio <= bounds.second, tag.str());
  }
  std::cerr << c.notes.str();
  return c.ok;
}

// ---------------------------------------------------------------------------
// 7. Bayesian-optimization comparative on Hartmann3

bool criterion7(Ctx& ctx) {
  Check c;
  const cli::Checkpoint& rgnp = get_or_train(ctx, "c7_rgnp_regime4_d3", models::Variant::kRGNP,
                                             tasks::Family::kRegimeIV, 3, 701);
  const bo::BlackBox bb = bo::hartmann3();
  const std::size_t restarts = 10, steps = 50;

  auto run_set = [&](const std::string& kind) {
    std::vector<double> finals(restarts);
    std::vector<std::size_t> idx(restarts);
    for (std::size_t r = 0; r < restarts; ++r) idx[r] = r;
    parallel_for(restarts, [&](std::size_t r) {
      Rng rng(Rng::mix(0xB0B0, r));
      std::unique_ptr<bo::Surrogate> s;
      bo::ProposalRule rule = bo::ProposalRule::kExpectedImprovement;
      if (kind == "gp") {
        s = std::make_unique<bo::GpSurrogate>();
      } else if (kind == "random") {
        s = std::make_unique<bo::GpSurrogate>();
        rule = bo::ProposalRule::kUniformRandom;
      } else {
        s = std::make_unique<bo::NpSurrogate>(rgnp.spec, rgnp.params);
      }
      const bo::BOTrace t = bo::bo_run(*s, bb, 5, steps, rng, rule);
      finals[r] = t.error.back();
    });
    std::vector<double> sorted = finals;
    std::sort(sorted.begin(), sorted.end());
    const double median = 0.5 * (sorted[restarts / 2 - 1] + sorted[restarts / 2]);
    std::cerr << "  " << kind << ": median final error " << median << " (min " << sorted.front()
              << ", max " << sorted.back() << ")\n";
    return median;
  };

  const auto t0 = Clock::now();
  const double med_np = run_set("rgnp");
  const double med_random = run_set("random");
  const double med_gp = run_set("gp");
  std::cerr << "  BO wall time " << std::chrono::duration<double>(Clock::now() - t0).count() / 60.0
            << " min\n";

  {
    std::ostringstream tag;
    tag << "RGNP median " << med_np << " < random median " << med_random;
    c.expect(med_np < med_random, tag.str());
  }
  {
    std::ostringstream tag;
    tag << "RGNP median " << med_np << " <= 1.5 x GP median (" << 1.5 * med_gp << ")";
    c.expect(med_np <= 1.5 * med_gp, tag.str());
  }
  std::cerr << c.notes.str();
  return c.ok;
}

// ---------------------------------------------------------------------------
// 8. Oracle equivalences

bool criterion8(Ctx&) {
  Check c;
  Rng rng(0xACC8);

  // Encoders against naive loops, with a random one-layer tanh network.
  {
    const std::size_t d_x = 2, d_rel = 5, n = 4, m = 3;
    const std::size_t in_dim = 2 * d_x + 2;  // full layout, difference comparison
    Tensor W({in_dim, d_rel}), b({d_rel});
    for (std::size_t i = 0; i < W.size(); ++i) W[i] = 0.6 * rng.normal();
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = 0.3 * rng.normal();
    auto net_eval = [&](const std::vector<double>& row) {
      std::vector<double> out(d_rel);
      for (std::size_t j = 0; j < d_rel; ++j) {
        double acc = b[j];
        for (std::size_t i = 0; i < row.size(); ++i) acc += row[i] * W.at(i, j);
        out[j] = std::tanh(acc);
      }
      return out;
    };
    auto net = [&](std::size_t width) {
      return [&, width](Tape& t, Val in) {
        Tensor Wc({width, d_rel}), bc = b;
        for (std::size_t i = 0; i < width; ++i)
          for (std::size_t j = 0; j < d_rel; ++j) Wc.at(i, j) = W.at(i, j);
        return t.tanh(t.add_rowvec(t.matmul(in, t.constant(Wc)), t.constant(bc)));
      };
    };

    const tasks::Task task = testsupport::random_task(n, m, d_x, rng);
    Tape tape;
    const Tensor full = tape.value(encoding::rho_full_all(
        tape, encoding::Comparison::kDifference, net(2 * d_x + 2), task.context_x, task.context_y,
        task.target_x));
    const Tensor diag = tape.value(encoding::rho_diag_all(
        tape, encoding::Comparison::kDifference, net(d_x + 1), task.context_x, task.context_y,
        task.target_x));
    const Tensor ds = tape.value(encoding::deepset_encode(tape, net(d_x + 1), task.context_x,
                                                          task.context_y));

    double worst_full = 0.0, worst_diag = 0.0, worst_ds = 0.0;
    for (std::size_t mi = 0; mi < m; ++mi) {
      std::vector<double> acc_full(d_rel, 0.0), acc_diag(d_rel, 0.0);
      for (std::size_t ni = 0; ni < n; ++ni) {
        std::vector<double> row_diag;
        for (std::size_t j = 0; j < d_x; ++j)
          row_diag.push_back(task.target_x.at(mi, j) - task.context_x.at(ni, j));
        row_diag.push_back(task.context_y.at(ni, 0));
        const auto vd = net_eval(row_diag);
        for (std::size_t j = 0; j < d_rel; ++j) acc_diag[j] += vd[j];
        for (std::size_t nj = 0; nj < n; ++nj) {
          std::vector<double> row;
          for (std::size_t j = 0; j < d_x; ++j)
            row.push_back(task.target_x.at(mi, j) - task.context_x.at(ni, j));
          for (std::size_t j = 0; j < d_x; ++j)
            row.push_back(task.context_x.at(nj, j) - task.context_x.at(ni, j));
          row.push_back(task.context_y.at(ni, 0));
          row.push_back(task.context_y.at(nj, 0));
          const auto vf = net_eval(row);
          for (std::size_t j = 0; j < d_rel; ++j) acc_full[j] += vf[j];
        }
      }
      for (std::size_t j = 0; j < d_rel; ++j) {
        worst_full = std::max(worst_full, std::abs(full.at(mi, j) - acc_full[j]));
        worst_diag = std::max(worst_diag, std::abs(diag.at(mi, j) - acc_diag[j]));
      }
    }
    std::vector<double> acc_ds(d_rel, 0.0);
    for (std::size_t ni = 0; ni < n; ++ni) {
      std::vector<double> row;
      for (std::size_t j = 0; j < d_x; ++j) row.push_back(task.context_x.at(ni, j));
      row.push_back(task.context_y.at(ni, 0));
      const auto v = net_eval(row);
      for (std::size_t j = 0; j < d_rel; ++j) acc_ds[j] += v[j];
    }
    for (std::size_t j = 0; j < d_rel; ++j)
      worst_ds = std::max(worst_ds, std::abs(ds[j] - acc_ds[j]));

    std::ostringstream tag;
    tag << "encoders vs naive loops: full " << worst_full << ", diag " << worst_diag
        << ", deepset " << worst_ds << " (all < 1e-12)";
    c.expect(worst_full < 1e-12 && worst_diag < 1e-12 && worst_ds < 1e-12, tag.str());
  }

  // mvn_logpdf and kl_gaussian against univariate closed forms.
  {
    double worst_pdf = 0.0, worst_kl = 0.0;
    for (int t = 0; t < 20; ++t) {
      const double x = rng.normal(), mu = rng.normal(), s = 0.4 + rng.uniform();
      const double uni = -0.5 * std::log(2.0 * M_PI) - std::log(s) -
                         0.5 * (x - mu) * (x - mu) / (s * s);
      worst_pdf = std::max(worst_pdf, std::abs(gp::mvn_logpdf(Tensor({1}, {x}), Tensor({1}, {mu}),
                                                              Tensor({1, 1}, {s * s})) -
                                               uni));
      const double mu2 = rng.normal(), s2 = 0.4 + rng.uniform();
      const double kl_uni = gp::kl_univariate(mu, s, mu2, s2);
      worst_kl = std::max(
          worst_kl, std::abs(gp::kl_gaussian(Tensor({1}, {mu}), Tensor({1, 1}, {s * s}),
                                             Tensor({1}, {mu2}), Tensor({1, 1}, {s2 * s2})) -
                             kl_uni));
    }
    // diagonal 3D case
    Tensor pm({3}), qm({3}), pc({3, 3}), qc({3, 3});
    double sum_uni = 0.0;
    for (int i = 0; i < 3; ++i) {
      pm[i] = rng.normal();
      qm[i] = rng.normal();
      const double ps = 0.5 + rng.uniform(), qs = 0.5 + rng.uniform();
      pc.at(i, i) = ps * ps;
      qc.at(i, i) = qs * qs;
      sum_uni += gp::kl_univariate(pm[i], ps, qm[i], qs);
    }
    worst_kl = std::max(worst_kl, std::abs(gp::kl_gaussian(pm, pc, qm, qc) - sum_uni));
    std::ostringstream tag;
    tag << "mvn_logpdf max err " << worst_pdf << ", kl_gaussian max err " << worst_kl
        << " (both < 1e-10)";
    c.expect(worst_pdf < 1e-10 && worst_kl < 1e-10, tag.str());
  }

  // GP posterior against the dense-inverse oracle.
  {
    const gp::KernelSpec k = gp::KernelSpec::eq(0.9, 1.2);
    Tensor X({5, 2}), Xs({3, 2}), Y({5});
    for (std::size_t i = 0; i < X.size(); ++i) X[i] = rng.uniform(-2, 2);
    for (std::size_t i = 0; i < Xs.size(); ++i) Xs[i] = rng.uniform(-2, 2);
    for (int i = 0; i < 5; ++i) Y[i] = rng.normal();
    const double s2 = 0.05;
    const gp::GPPosterior post = gp::posterior(k, X, Y, Xs, s2);
    Tensor kxx = gp::gram(k, X, X);
    for (int i = 0; i < 5; ++i) kxx.at(i, i) += s2;
    const Tensor kinv = testsupport::dense_inverse(kxx);
    const Tensor kxs = gp::gram(k, X, Xs);
    const Tensor kss = gp::gram(k, Xs, Xs);
    double worst = 0.0;
    for (int r = 0; r < 3; ++r) {
      double m = 0.0;
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) m += kxs.at(i, r) * kinv.at(i, j) * Y[j];
      worst = std::max(worst, std::abs(post.mean[r] - m));
      for (int cc = 0; cc < 3; ++cc) {
        double v = kss.at(r, cc);
        for (int i = 0; i < 5; ++i)
          for (int j = 0; j < 5; ++j) v -= kxs.at(i, r) * kinv.at(i, j) * kxs.at(j, cc);
        worst = std::max(worst, std::abs(post.cov.at(r, cc) - v));
      }
    }
    std::ostringstream tag;
    tag << "posterior vs dense inverse: max err " << worst << " < 1e-8";
    c.expect(worst < 1e-8, tag.str());
  }

  std::cerr << c.notes.str();
  return c.ok;
}

// ---------------------------------------------------------------------------
// 9. Trainer contract

bool criterion9(Ctx& ctx) {
  Check c;

  // Appendix-style hand case: mean -1, sample std exactly 0.2, N = 400.
  const double delta = 0.2 * std::sqrt(399.0 / 400.0);
  std::vector<double> vals;
  for (int i = 0; i < 200; ++i) {
    vals.push_back(-1.0 + delta);
    vals.push_back(-1.0 - delta);
  }
  const double score = train::confidence_score(vals);
  {
    std::ostringstream tag;
    tag << "validation score hand case: " << score << " vs -1.0196 (err "
        << std::abs(score + 1.0196) << " < 1e-9)";
    c.expect(std::abs(score - (-1.0196)) < 1e-9, tag.str());
  }

  // Checkpointed parameters reproduce the stored best score bit-exactly,
  // through a save/load round trip.
  models::ModelSpec spec = desk_spec(models::Variant::kRCNP, 1);
  spec.embed_dim = 32;
  spec.enc_width = 32;
  spec.dec_width = 32;
  train::TrainConfig cfg = desk_train_cfg(901);
  cfg.epochs = 3;
  cfg.tasks_per_epoch = 64;
  cfg.validation_tasks = 32;
  const tasks::TaskConfig task_cfg = tasks::TaskConfig::defaults(tasks::Family::kEQ, 1);
  const train::TrainResult res = train::train(spec, task_cfg, cfg);

  cli::Checkpoint ck;
  ck.spec = spec;
  ck.family = tasks::Family::kEQ;
  ck.train_cfg = cfg;
  ck.best_val_score = res.record.best_val_score;
  ck.best_epoch = res.record.best_epoch;
  ck.params = res.params;
  const std::string path = ctx.cache_dir + "/c9_roundtrip.rcnp";
  cli::save_checkpoint(path, ck);
  const cli::Checkpoint loaded = cli::load_checkpoint(path);

  const auto val_set = tasks::generate_epoch(task_cfg, cfg.validation_tasks,
                                             tasks::RangeMode::kInterpolation,
                                             cfg.validation_seed);
  const double re_eval = train::validation_score(loaded.spec, loaded.params, val_set);
  {
    std::ostringstream tag;
    tag << "re-evaluated best score " << re_eval << " == stored " << loaded.best_val_score
        << " (bit-exact)";
    c.expect(re_eval == loaded.best_val_score, tag.str());
  }

  std::cerr << c.notes.str();
  return c.ok;
}

}  // namespace

int main(int argc, char** argv) {
  std::string cache_dir = "acceptance_cache";
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--cache-dir" && i + 1 < argc) {
      cache_dir = argv[++i];
    } else if (arg == "--criterion" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) selected.push_back(std::stoi(item));
    } else {
      std::cerr << "usage: acceptance [--cache-dir DIR] [--criterion 1,2,...]\n";
      return 2;
    }
  }
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  fs::create_directories(cache_dir);

  Ctx ctx;
  ctx.cache_dir = cache_dir;

  struct Entry {
    int id;
    const char* name;
    bool (*fn)(Ctx&);
  };
  const Entry entries[] = {
      {1, "equivariance suite", criterion1},
      {2, "gradient suite", criterion2},
      {3, "OOID generalization", criterion3},
      {4, "exact-translation parity", criterion4},
      {5, "KL ordering", criterion5},
      {6, "complexity bench", criterion6},
      {7, "BO comparative", criterion7},
      {8, "oracle equivalences", criterion8},
      {9, "trainer contract", criterion9},
  };

  int failures = 0;
  for (const Entry& e : entries) {
    if (std::find(selected.begin(), selected.end(), e.id) == selected.end()) continue;
    std::cerr << "--- criterion " << e.id << ": " << e.name << "\n";
    const auto t0 = Clock::now();
    bool ok = false;
    try {
      ok = e.fn(ctx);
    } catch (const std::exception& ex) {
      std::cerr << "    exception: " << ex.what() << "\n";
      ok = false;
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    std::cout << "criterion " << e.id << " (" << e.name << "): " << (ok ? "PASS" : "FAIL")
              << "  [" << secs << " s]" << std::endl;
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
