// volbench: run and compare the Volume Algorithm against Momentum, Adam and
// RMSProp on piecewise-linear testbeds and small MLP training problems.
//
// Exit codes: 0 success, 2 configuration error, 3 data/estimator error,
// 4 numerical divergence.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "volalg/bench.hpp"
#include "volalg/errors.hpp"
#include "volalg/pwl.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDiverged = 4;

struct CommonFlags {
  std::string config_path;
  std::string problem;
  std::string optimizer;
  std::optional<double> lr;
  std::optional<double> alpha;
  std::optional<long long> epochs;
  std::optional<long long> batch_size;
  std::optional<long long> seed;
  std::optional<long long> switch_step;
  std::optional<double> switch_s;
  std::string out;
  std::optional<long long> log_every;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path,
                  "key = value config file; flags override it");
  cmd->add_option("--problem", flags.problem,
                  "pwl:<fixture>[,start=v;v...] | "
                  "blobs:classes=..,per_class=..,dim=..,spread=.. | "
                  "mnist:images=..,labels=..[,subset=N]");
  cmd->add_option("--optimizer", flags.optimizer,
                  "volume | momentum | adam | rmsprop");
  cmd->add_option("--lr,--s0", flags.lr,
                  "learning rate (baselines) or initial step size (volume)");
  cmd->add_option("--alpha", flags.alpha, "volume decay (default 0.1)");
  cmd->add_option("--epochs", flags.epochs,
                  "epochs; for pwl problems, subgradient steps");
  cmd->add_option("--batch-size", flags.batch_size, "minibatch size");
  cmd->add_option("--seed", flags.seed, "run seed");
  cmd->add_option("--switch-step", flags.switch_step,
                  "step index for the volume interval switch");
  cmd->add_option("--switch-s", flags.switch_s,
                  "new step size at the switch step");
  cmd->add_option("--out", flags.out, "output CSV (run) or directory (sweep)");
  cmd->add_option("--log-every", flags.log_every,
                  "NN logging cadence in steps (default 10)");
}

volalg::RunConfig build_run_config(const CommonFlags& flags,
                                   bool out_is_dir) {
  volalg::RunConfig config;
  bool have_problem = false;
  if (!flags.config_path.empty()) {
    const auto kv = volalg::parse_config_file(flags.config_path);
    volalg::apply_config(kv, config);
    have_problem = kv.count("problem") > 0;
  }
  if (!flags.problem.empty()) {
    config.problem = volalg::parse_problem(flags.problem);
    have_problem = true;
  }
  if (!have_problem) {
    throw volalg::InputError("no problem given (use --problem or a config)");
  }
  if (!flags.optimizer.empty()) {
    config.optimizer = volalg::optimizer_kind_from_name(flags.optimizer);
  }
  if (flags.lr) config.lr_or_s0 = *flags.lr;
  if (flags.alpha) config.alpha = *flags.alpha;
  if (flags.epochs) config.epochs = *flags.epochs;
  if (flags.batch_size) config.batch_size = *flags.batch_size;
  if (flags.seed) config.seed = static_cast<std::uint64_t>(*flags.seed);
  if (flags.switch_step.has_value() != flags.switch_s.has_value()) {
    throw volalg::InputError(
        "--switch-step and --switch-s must be given together");
  }
  if (flags.switch_step) {
    config.switch_step = {{*flags.switch_step, *flags.switch_s}};
  }
  if (!out_is_dir && !flags.out.empty()) config.out_csv = flags.out;
  if (flags.log_every) config.log_every = *flags.log_every;
  return config;
}

void print_summary(const volalg::RunConfig& config,
                   const volalg::RunSummary& s) {
  std::printf("optimizer: %s  lr/s0: %g  seed: %llu\n",
              volalg::optimizer_kind_name(config.optimizer).c_str(),
              config.lr_or_s0,
              static_cast<unsigned long long>(config.seed));
  std::printf("steps: %lld\n", s.steps);
  if (config.problem.kind == volalg::ProblemKind::kPwl) {
    std::printf("initial value: %.10g\n", -s.init_loss);
    std::printf("final value:   %.10g\n", -s.final_loss);
    std::printf("best value:    %.10g (step %lld)\n", s.best_value,
                s.best_step);
  } else {
    std::printf("initial train loss: %.10g\n", s.init_loss);
    std::printf("final train loss:   %.10g\n", s.final_loss);
    if (s.final_accuracy) {
      std::printf("final train accuracy: %.6f\n", *s.final_accuracy);
    }
    if (s.best_accuracy) {
      std::printf("best train accuracy:  %.6f\n", *s.best_accuracy);
    }
    if (s.final_eval_accuracy) {
      std::printf("final eval accuracy:  %.6f\n", *s.final_eval_accuracy);
    }
  }
  if (!config.out_csv.empty()) {
    std::printf("metrics: %s\n", config.out_csv.c_str());
  }
}

int run_command(const CommonFlags& flags) {
  const volalg::RunConfig config = build_run_config(flags, false);
  const volalg::RunResult result = volalg::run_single(config);
  print_summary(config, result.summary);
  return kExitOk;
}

int sweep_command(const CommonFlags& flags, const std::string& grid_text,
                  const std::string& selection, int workers) {
  volalg::SweepConfig sweep;
  sweep.base = build_run_config(flags, true);
  sweep.out_dir = flags.out.empty() ? "sweep_out" : flags.out;
  sweep.workers = workers;
  if (!grid_text.empty()) {
    for (const auto& tok : CLI::detail::split(grid_text, ',')) {
      try {
        sweep.grid.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw volalg::InputError("bad grid value '" + tok + "'");
      }
    }
  }
  if (selection == "final_train_loss") {
    sweep.selection = volalg::SelectionMetric::kFinalTrainLoss;
  } else if (selection == "final_eval_accuracy") {
    sweep.selection = volalg::SelectionMetric::kFinalEvalAccuracy;
  } else {
    throw volalg::InputError("unknown selection metric '" + selection + "'");
  }

  const volalg::SweepReport report = volalg::run_sweep(sweep);
  for (const auto& row : report.rows) {
    if (row.failed) {
      std::printf("lr %-12g FAILED: %s\n", row.lr, row.error.c_str());
    } else {
      std::printf("lr %-12g final_loss %-22.17g%s\n", row.lr,
                  row.summary.final_loss, row.best ? "  <- best" : "");
    }
  }
  std::printf("summary: %s\n", report.summary_csv_path.c_str());
  return kExitOk;
}

int duality_command(const std::string& fixture, const std::string& at,
                    double epsilon, double radius, long long samples,
                    long long seed, double tol) {
  std::vector<double> x;
  for (const auto& tok : CLI::detail::split(at, ',')) {
    try {
      x.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw volalg::InputError("bad coordinate '" + tok + "' in --at");
    }
  }
  const volalg::DualityReport report = volalg::demo_duality(
      fixture, x, epsilon, radius, samples,
      static_cast<std::uint64_t>(seed), tol);
  std::fputs(volalg::format_duality_report(report).c_str(), stdout);
  return kExitOk;
}

int inspect_csv_command(const std::string& path) {
  const auto records = volalg::read_metrics_csv(path);
  std::printf("%s: %zu records\n", path.c_str(), records.size());
  if (records.empty()) return kExitOk;
  double min_loss = records.front().train_loss;
  double max_loss = records.front().train_loss;
  for (const auto& r : records) {
    min_loss = std::min(min_loss, r.train_loss);
    max_loss = std::max(max_loss, r.train_loss);
  }
  const auto& last = records.back();
  std::printf("steps %lld..%lld, epochs %lld..%lld\n", records.front().step,
              last.step, records.front().epoch, last.epoch);
  std::printf("train_loss: first %.10g, last %.10g, min %.10g, max %.10g\n",
              records.front().train_loss, last.train_loss, min_loss,
              max_loss);
  if (last.train_accuracy) {
    std::printf("last train_accuracy: %.6f\n", *last.train_accuracy);
  }
  if (last.eval_accuracy) {
    std::printf("last eval_accuracy: %.6f\n", *last.eval_accuracy);
  }
  if (last.step_size) {
    std::printf("last step_size %.10g, gy %.10g, d_norm %.10g\n",
                *last.step_size, last.gy.value_or(0.0),
                last.d_norm.value_or(0.0));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Volume Algorithm benchmark harness"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "execute a single training run");
  add_common_flags(run, run_flags);

  CommonFlags sweep_flags;
  std::string grid_text;
  std::string selection = "final_train_loss";
  int workers = 2;
  CLI::App* sweep =
      app.add_subcommand("sweep", "run a learning-rate grid sweep");
  add_common_flags(sweep, sweep_flags);
  sweep->add_option("--grid", grid_text,
                    "comma-separated learning rates (default: built-in grid)");
  sweep->add_option("--selection-metric", selection,
                    "final_train_loss | final_eval_accuracy");
  sweep->add_option("--workers", workers, "parallel runs (default 2)");

  std::string fixture, at = "0,0";
  double epsilon = 1.0, radius = 1.0, tol = 0.05;
  long long samples = 1000000, dseed = 1;
  CLI::App* duality = app.add_subcommand(
      "duality", "dual-weight and improvement-direction demo on a fixture");
  duality->add_option("--fixture", fixture, "PWL fixture path")->required();
  duality->add_option("--at", at, "evaluation point, comma separated");
  duality->add_option("--epsilon", epsilon, "hyperplane offset (> 0)");
  duality->add_option("--radius", radius, "sampling half-width (> 0)");
  duality->add_option("--samples", samples, "Monte-Carlo samples");
  duality->add_option("--seed", dseed, "sampling seed");
  duality->add_option("--tol", tol, "optimality tolerance on the direction");

  std::string csv_path;
  CLI::App* inspect =
      app.add_subcommand("inspect-csv", "summarize a metrics CSV");
  inspect->add_option("path", csv_path, "metrics CSV file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) return run_command(run_flags);
    if (sweep->parsed()) {
      return sweep_command(sweep_flags, grid_text, selection, workers);
    }
    if (duality->parsed()) {
      return duality_command(fixture, at, epsilon, radius, samples, dseed,
                             tol);
    }
    if (inspect->parsed()) return inspect_csv_command(csv_path);
  } catch (const volalg::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const volalg::InputError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const volalg::ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const volalg::UnboundedError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const volalg::EmptyEstimateError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitConfig;
}
