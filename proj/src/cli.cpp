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

#include "rcnp/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "rcnp/bayesopt.hpp"
#include "rcnp/checkpoint.hpp"
#include "rcnp/evalbench.hpp"
#include "rcnp/models.hpp"
#include "rcnp/parallel.hpp"
#include "rcnp/tasks.hpp"
#include "rcnp/trainer.hpp"

namespace rcnp::cli {

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

// Ready-to-run plotting script next to a report CSV.
void write_gnuplot_stub(const std::string& csv_path, const std::string& kind,
                        std::size_t n_rows) {
  std::ofstream out = open_out(csv_path + ".gnuplot");
  out << "#!/usr/bin/env gnuplot\n";
  out << "set datafile separator ','\n";
  out << "set key left top\n";
  if (kind == "eval") {
    out << "set xlabel 'task index'\nset ylabel 'metric value'\n";
    out << "plot '" << csv_path << "' every ::1::" << n_rows
        << " using 1:2 with points pt 7 ps 0.4 title 'per task'\n";
  } else if (kind == "bench") {
    out << "set logscale xy\nset xlabel 'context size N'\nset ylabel 'forward time (ms)'\n";
    out << "plot '" << csv_path
        << "' every ::1 using 1:2:3 with yerrorlines title 'mean +- std'\n";
  } else {  // bo trace
    out << "set xlabel 'step'\nset ylabel 'error'\nset logscale y\n";
    out << "plot '" << csv_path << "' every ::1 using 1:5 with lines title 'error'\n";
  }
  out << "pause -1\n";
}

struct TrainArgs {
  std::string task = "eq";
  std::size_t dx = 1;
  std::string model = "rcnp";
  std::string head;
  std::string comparison;
  std::string scale = "desk";
  std::size_t epochs = 0;
  std::size_t tasks_per_epoch = 0;
  std::size_t batch = 0;
  double lr = 0.0;
  std::size_t val_tasks = 0;
  double clip = -1.0;  // <0: keep default
  std::uint64_t seed = 1;
  std::string out;
  std::string log;
  bool mean_aggregation = false;
};

// Resolve the variant/head/comparison triple; throws CLI::ValidationError
// for contradictory combinations.
models::ModelSpec resolve_spec(const TrainArgs& a) {
  models::ModelSpec spec;
  if (!models::parse_variant(a.model, spec.variant)) {
    throw CLI::ValidationError("--model", "unknown model '" + a.model + "'");
  }
  if (!a.comparison.empty() && !spec.is_relational()) {
    throw CLI::ValidationError("--comparison",
                               "model '" + a.model + "' takes no comparison function");
  }
  if (a.comparison == "diff") {
    spec.comparison = encoding::Comparison::kDifference;
  } else if (a.comparison == "dist") {
    spec.comparison = encoding::Comparison::kDistance;
  } else if (!a.comparison.empty()) {
    throw CLI::ValidationError("--comparison", "expected diff or dist");
  } else if (spec.is_full()) {
    spec.comparison = encoding::Comparison::kDistance;  // isotropic default
  }
  if (a.head.empty()) {
    spec.head = spec.is_gaussian() ? models::Head::kLowRankLinear : models::Head::kMeanField;
  } else if (!models::parse_head(a.head, spec.head)) {
    throw CLI::ValidationError("--head", "expected meanfield, linear or kvv");
  }
  spec.d_x = a.dx;
  spec.mean_aggregation = a.mean_aggregation;
  if (a.scale == "paper") {
    spec.embed_dim = 256;
    spec.enc_width = 256;
    spec.dec_width = 256;
    spec.d_sigma = 64;
  } else if (a.scale != "desk") {
    throw CLI::ValidationError("--scale", "expected desk or paper");
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw CLI::ValidationError("train", e.what());
  }
  return spec;
}

train::TrainConfig resolve_train_cfg(const TrainArgs& a) {
  train::TrainConfig cfg;
  if (a.scale == "paper") {
    cfg.epochs = 100;
    cfg.tasks_per_epoch = 1 << 14;
    cfg.validation_tasks = 1 << 12;
  }
  if (a.epochs) cfg.epochs = a.epochs;
  if (a.tasks_per_epoch) cfg.tasks_per_epoch = a.tasks_per_epoch;
  if (a.batch) cfg.batch_size = a.batch;
  if (a.lr > 0.0) cfg.learning_rate = a.lr;
  if (a.val_tasks) cfg.validation_tasks = a.val_tasks;
  if (a.clip >= 0.0) cfg.grad_clip_norm = a.clip;
  cfg.data_seed = a.seed;
  cfg.validation_seed = Rng::mix(a.seed, 0x5eed0001);
  cfg.init_seed = Rng::mix(a.seed, 0x5eed0002);
  return cfg;
}

int cmd_train(const TrainArgs& a) {
  tasks::Family family;
  if (!parse_family(a.task, family)) {
    throw CLI::ValidationError("--task", "unknown task family '" + a.task + "'");
  }
  const models::ModelSpec spec = resolve_spec(a);
  const train::TrainConfig cfg = resolve_train_cfg(a);
  const tasks::TaskConfig task_cfg = tasks::TaskConfig::defaults(family, a.dx);

  const std::string log_path = a.log.empty() ? a.out + ".train.csv" : a.log;
  std::ofstream log = open_out(log_path);
  std::cerr << "training " << a.model << " on " << a.task << " d_x=" << a.dx << " ("
            << cfg.epochs << " epochs x " << cfg.tasks_per_epoch << " tasks)\n";
  const train::TrainResult res =
      train::train(spec, task_cfg, cfg, &log, [&](std::size_t epoch, const train::EpochStats& s) {
        std::cerr << "epoch " << epoch << ": train loss " << s.train_loss << ", val score "
                  << s.val_score << "\n";
      });

  Checkpoint ck;
  ck.spec = spec;
  ck.family = family;
  ck.train_cfg = cfg;
  ck.best_val_score = res.record.best_val_score;
  ck.best_epoch = res.record.best_epoch;
  ck.params = res.params;
  save_checkpoint(a.out, ck);
  std::cerr << "saved " << a.out << " (best epoch " << res.record.best_epoch << ", score "
            << res.record.best_val_score << ")\n";
  return kOk;
}

struct EvalArgs {
  std::string checkpoint;
  std::string mode = "int";
  std::string metric = "loglik";
  std::size_t n_eval = 256;
  std::uint64_t eval_seed = 11;
  std::string out;
  std::string dump_tasks;
  bool mean_field_joint = false;
  bool trivial = false;
  bool gp_reference = false;
  bool gnuplot_stub = false;
};

void write_report_csv(const std::string& path, const bench::EvalReport& rep) {
  std::ofstream out = open_out(path);
  out << "task_index,value\n";
  for (std::size_t i = 0; i < rep.per_task.size(); ++i) out << i << "," << rep.per_task[i] << "\n";
  out << "mean," << rep.mean << "\n";
  out << "std," << rep.stddev << "\n";
}

int cmd_eval(const EvalArgs& a) {
  if (a.mode != "int" && a.mode != "ooid") {
    throw CLI::ValidationError("--mode", "expected int or ooid");
  }
  if (a.metric != "loglik" && a.metric != "kl") {
    throw CLI::ValidationError("--metric", "expected loglik or kl");
  }
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const tasks::TaskConfig task_cfg = tasks::TaskConfig::defaults(ck.family, ck.spec.d_x);
  const tasks::RangeMode mode = a.mode == "int" ? tasks::RangeMode::kInterpolation
                                                : tasks::RangeMode::kOutOfInputDistribution;
  const std::vector<tasks::Task> eval_set =
      tasks::generate_epoch(task_cfg, a.n_eval, mode, a.eval_seed);
  if (!a.dump_tasks.empty()) save_tasks(a.dump_tasks, eval_set);

  bench::EvalReport rep;
  if (a.gp_reference) {
    rep = bench::gp_reference_loglik(eval_set, a.mode);
  } else if (a.trivial) {
    rep = a.metric == "kl" ? bench::trivial_kl(eval_set, a.mean_field_joint, a.mode)
                           : bench::trivial_loglik(eval_set, a.mode);
  } else if (a.metric == "kl") {
    rep = bench::normalized_kl(ck.spec, ck.params, eval_set, a.mean_field_joint, a.mode);
  } else {
    rep = bench::normalized_loglik(ck.spec, ck.params, eval_set, a.mode);
  }
  write_report_csv(a.out, rep);
  if (a.gnuplot_stub) write_gnuplot_stub(a.out, "eval", rep.per_task.size());
  std::cerr << a.metric << " (" << a.mode << "): mean " << rep.mean << ", std " << rep.stddev
            << " over " << rep.per_task.size() << " tasks\n";
  return kOk;
}

struct BoArgs {
  std::string fn = "hartmann3";
  std::string surrogate = "gp";
  std::string checkpoint;
  std::size_t steps = 50;
  std::size_t init = 5;
  std::size_t restarts = 10;
  std::uint64_t seed = 3;
  std::string out;
  bool gnuplot_stub = false;
};

void write_trace_csv(const std::string& path, const bo::BOTrace& trace) {
  std::ofstream out = open_out(path);
  out << "step,x,y,best,error\n";
  for (std::size_t i = 0; i < trace.points.size(); ++i) {
    out << i << ",\"";
    for (std::size_t j = 0; j < trace.points[i].size(); ++j) {
      if (j) out << ",";
      out << trace.points[i][j];
    }
    out << "\"," << trace.values[i] << "," << trace.best[i] << "," << trace.error[i] << "\n";
  }
}

int cmd_bo(const BoArgs& a) {
  bo::BlackBox bb;
  if (a.fn == "hartmann3") {
    bb = bo::hartmann3();
  } else if (a.fn == "hartmann6") {
    bb = bo::hartmann6();
  } else {
    throw CLI::ValidationError("--fn", "unknown function '" + a.fn + "'");
  }

  const bool np_surrogate = a.surrogate != "gp" && a.surrogate != "random";
  Checkpoint ck;
  if (np_surrogate) {
    if (a.checkpoint.empty()) {
      throw CLI::ValidationError("--checkpoint",
                                 "surrogate '" + a.surrogate + "' needs a checkpoint");
    }
    models::Variant v;
    if (!models::parse_variant(a.surrogate, v)) {
      throw CLI::ValidationError("--surrogate", "expected a model name, gp, or random");
    }
    ck = load_checkpoint(a.checkpoint);
    if (ck.spec.variant != v) {
      throw std::runtime_error("checkpoint holds a " +
                               std::string(models::variant_name(ck.spec.variant)) +
                               " model, not " + a.surrogate);
    }
    if (ck.spec.d_x != bb.dim) {
      throw std::runtime_error("checkpoint d_x=" + std::to_string(ck.spec.d_x) +
                               " does not match " + bb.name +
                               " (d=" + std::to_string(bb.dim) + ")");
    }
  }

  std::vector<double> final_errors(a.restarts);
  std::vector<bo::BOTrace> traces(a.restarts);
  parallel_for(a.restarts, [&](std::size_t r) {
    Rng rng(Rng::mix(a.seed, r));
    std::unique_ptr<bo::Surrogate> s;
    bo::ProposalRule rule = bo::ProposalRule::kExpectedImprovement;
    if (a.surrogate == "gp") {
      s = std::make_unique<bo::GpSurrogate>();
    } else if (a.surrogate == "random") {
      s = std::make_unique<bo::GpSurrogate>();  // never consulted
      rule = bo::ProposalRule::kUniformRandom;
    } else {
      s = std::make_unique<bo::NpSurrogate>(ck.spec, ck.params);
    }
    traces[r] = bo::bo_run(*s, bb, a.init, a.steps, rng, rule);
    final_errors[r] = traces[r].error.back();
  });

  for (std::size_t r = 0; r < a.restarts; ++r) {
    const std::string trace_path = a.out + ".restart" + std::to_string(r) + ".csv";
    write_trace_csv(trace_path, traces[r]);
    if (a.gnuplot_stub) write_gnuplot_stub(trace_path, "bo", traces[r].points.size());
  }
  std::vector<double> sorted = final_errors;
  std::sort(sorted.begin(), sorted.end());
  const double median = a.restarts % 2 == 1
                            ? sorted[a.restarts / 2]
                            : 0.5 * (sorted[a.restarts / 2 - 1] + sorted[a.restarts / 2]);
  std::ofstream summary = open_out(a.out + ".summary.csv");
  summary << "restart,final_error\n";
  for (std::size_t r = 0; r < a.restarts; ++r) summary << r << "," << final_errors[r] << "\n";
  summary << "median," << median << "\n";
  std::cerr << a.surrogate << " on " << a.fn << ": median final error " << median << " over "
            << a.restarts << " restarts\n";
  return kOk;
}

struct BenchArgs {
  std::string model = "fullrcnp";
  std::string n_list = "10,20,40,80";
  std::size_t m = 20;
  std::size_t repeats = 50;
  std::size_t dx = 1;
  std::uint64_t seed = 1;
  std::string out;
  bool gnuplot_stub = false;
};

int cmd_bench(const BenchArgs& a) {
  models::ModelSpec spec;
  if (!models::parse_variant(a.model, spec.variant)) {
    throw CLI::ValidationError("--model", "unknown model '" + a.model + "'");
  }
  spec.head = spec.is_gaussian() ? models::Head::kLowRankLinear : models::Head::kMeanField;
  spec.comparison = spec.is_full() ? encoding::Comparison::kDistance
                                   : encoding::Comparison::kDifference;
  spec.d_x = a.dx;
  const models::ModelParams params = models::init(spec, a.seed);

  std::vector<std::size_t> sizes;
  std::stringstream ss(a.n_list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) sizes.push_back(std::stoul(item));
  }
  if (sizes.empty()) throw CLI::ValidationError("--n", "no context sizes given");

  const auto rows = bench::runtime_bench(spec, params, sizes, a.m, a.repeats, a.seed);
  std::ofstream out = open_out(a.out);
  out << "n,mean_ms,std_ms\n";
  for (const bench::BenchRow& r : rows) {
    out << r.n << "," << r.mean_ms << "," << r.std_ms << "\n";
    std::cerr << a.model << " N=" << r.n << ": " << r.mean_ms << " ms (+-" << r.std_ms << ")\n";
  }
  if (a.gnuplot_stub) write_gnuplot_stub(a.out, "bench", rows.size());
  return kOk;
}

struct PropArgs {
  std::string suite = "all";
  std::size_t trials = 50;
  std::uint64_t seed = 1;
  bool negate_control = false;
};

int cmd_proptest(const PropArgs& a) {
  if (a.suite != "all" && a.suite != "equivariance" && a.suite != "gradients") {
    throw CLI::ValidationError("--suite", "expected equivariance, gradients or all");
  }
  const int failures = run_property_suites(a.suite, a.trials, a.seed, a.negate_control, std::cout);
  if (failures > 0) {
    std::cerr << failures << " propert" << (failures == 1 ? "y" : "ies") << " failed\n";
    return kRuntimeError;
  }
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Relational conditional neural processes: training, evaluation, "
               "Bayesian optimization and property checks"};
  app.require_subcommand(1);

  TrainArgs ta;
  CLI::App* tr = app.add_subcommand("train", "train a model and write a checkpoint");
  tr->add_option("--task", ta.task, "task family (eq|matern52|weakly-periodic|sawtooth|mixture)");
  tr->add_option("--dx", ta.dx, "input dimension");
  tr->add_option("--model", ta.model, "cnp|gnp|rcnp|rgnp|fullrcnp|fullrgnp");
  tr->add_option("--head", ta.head, "meanfield|linear|kvv (default by model)");
  tr->add_option("--comparison", ta.comparison, "diff|dist (relational models only)");
  tr->add_option("--scale", ta.scale, "desk|paper preset");
  tr->add_option("--epochs", ta.epochs, "override epochs");
  tr->add_option("--tasks-per-epoch", ta.tasks_per_epoch, "override tasks per epoch");
  tr->add_option("--batch", ta.batch, "override batch size");
  tr->add_option("--lr", ta.lr, "override learning rate");
  tr->add_option("--clip", ta.clip, "gradient clip (global norm; 0 disables)");
  tr->add_option("--val-tasks", ta.val_tasks, "override validation set size");
  tr->add_option("--seed", ta.seed, "seed (validation/init seeds derived)");
  tr->add_flag("--mean-agg", ta.mean_aggregation,
               "ablation: mean aggregation in the encoders instead of sum");
  tr->add_option("--out", ta.out, "checkpoint output path")->required();
  tr->add_option("--log", ta.log, "training CSV path (default <out>.train.csv)");

  EvalArgs ea;
  CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint on a seeded task set");
  ev->add_option("--checkpoint", ea.checkpoint, "checkpoint path")->required();
  ev->add_option("--mode", ea.mode, "int|ooid");
  ev->add_option("--metric", ea.metric, "loglik|kl");
  ev->add_option("--n-eval", ea.n_eval, "evaluation set size");
  ev->add_option("--eval-seed", ea.eval_seed, "evaluation set seed");
  ev->add_option("--out", ea.out, "report CSV path")->required();
  ev->add_option("--dump-tasks", ea.dump_tasks, "also write the task set to this path");
  ev->add_flag("--mf-joint", ea.mean_field_joint,
               "use joint (diagonal-vs-full) KL for mean-field models");
  ev->add_flag("--trivial", ea.trivial, "evaluate the trivial moment predictor instead");
  ev->add_flag("--gp-reference", ea.gp_reference,
               "evaluate the exact GP posterior instead (loglik only)");
  ev->add_flag("--gnuplot-stub", ea.gnuplot_stub, "also write <out>.gnuplot");

  BoArgs ba;
  CLI::App* bop = app.add_subcommand("bo", "Bayesian optimization on a test function");
  bop->add_option("--fn", ba.fn, "hartmann3|hartmann6");
  bop->add_option("--surrogate", ba.surrogate, "model name|gp|random");
  bop->add_option("--checkpoint", ba.checkpoint, "checkpoint for model surrogates");
  bop->add_option("--steps", ba.steps, "optimization steps");
  bop->add_option("--init", ba.init, "initial random observations");
  bop->add_option("--restarts", ba.restarts, "independent restarts");
  bop->add_option("--seed", ba.seed, "base seed");
  bop->add_option("--out", ba.out, "output prefix for trace/summary CSVs")->required();
  bop->add_flag("--gnuplot-stub", ba.gnuplot_stub, "also write .gnuplot stubs per trace");

  BenchArgs bn;
  CLI::App* be = app.add_subcommand("bench", "forward-pass runtime over context sizes");
  be->add_option("--model", bn.model, "model to time");
  be->add_option("--n", bn.n_list, "comma-separated context sizes");
  be->add_option("--m", bn.m, "target set size");
  be->add_option("--repeats", bn.repeats, "forward passes per size");
  be->add_option("--dx", bn.dx, "input dimension");
  be->add_option("--seed", bn.seed, "seed");
  be->add_option("--out", bn.out, "timing CSV path")->required();
  be->add_flag("--gnuplot-stub", bn.gnuplot_stub, "also write <out>.gnuplot");

  PropArgs pa;
  CLI::App* pt = app.add_subcommand("proptest", "run the property suites");
  pt->add_option("--suite", pa.suite, "equivariance|gradients|all");
  pt->add_option("--trials", pa.trials, "trials per property");
  pt->add_option("--seed", pa.seed, "seed");
  pt->add_flag("--negate-control", pa.negate_control,
               "flip the CNP translation control (run should then fail)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (tr->parsed()) return cmd_train(ta);
    if (ev->parsed()) return cmd_eval(ea);
    if (bop->parsed()) return cmd_bo(ba);
    if (be->parsed()) return cmd_bench(bn);
    if (pt->parsed()) return cmd_proptest(pa);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}

}  // namespace rcnp::cli
