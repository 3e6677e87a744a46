#include "volalg/bench.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include "format_util.hpp"
#include "volalg/dataset.hpp"
#include "volalg/errors.hpp"
#include "volalg/nn.hpp"
#include "volalg/rng.hpp"

namespace volalg {

OptimizerKind optimizer_kind_from_name(const std::string& name) {
  if (name == "volume") return OptimizerKind::kVolume;
  if (name == "momentum") return OptimizerKind::kMomentum;
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "rmsprop") return OptimizerKind::kRmsprop;
  throw InputError("unknown optimizer '" + name +
                   "' (expected volume|momentum|adam|rmsprop)");
}

std::string optimizer_kind_name(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kVolume: return "volume";
    case OptimizerKind::kMomentum: return "momentum";
    case OptimizerKind::kAdam: return "adam";
    case OptimizerKind::kRmsprop: return "rmsprop";
  }
  return "unknown";
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

long long parse_int(const std::string& v, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long r = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw InputError("bad integer for " + what + ": '" + v + "'");
  }
}

double parse_real(const std::string& v, const std::string& what) {
  double r = 0.0;
  if (!detail::parse_double(v, r)) {
    throw InputError("bad number for " + what + ": '" + v + "'");
  }
  return r;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, sep)) parts.push_back(part);
  return parts;
}

Vec parse_real_list(const std::string& v, const std::string& what) {
  Vec out;
  for (const std::string& tok : split(v, ';')) {
    out.push_back(parse_real(trim(tok), what));
  }
  return out;
}

}  // namespace

ProblemSpec parse_problem(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw InputError("problem must look like kind:params, got '" + text + "'");
  }
  const std::string kind = text.substr(0, colon);
  const std::string rest = text.substr(colon + 1);
  ProblemSpec p;
  p.text = text;

  auto parse_kv = [&](const std::string& item) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw InputError("expected key=value in problem parameter '" + item +
                       "'");
    }
    return std::pair<std::string, std::string>(trim(item.substr(0, eq)),
                                               trim(item.substr(eq + 1)));
  };
  auto parse_hidden = [&](const std::string& v) {
    std::vector<std::size_t> hidden;
    for (const std::string& tok : split(v, ';')) {
      const long long h = parse_int(trim(tok), "hidden");
      if (h < 1) throw InputError("hidden sizes must be >= 1");
      hidden.push_back(static_cast<std::size_t>(h));
    }
    return hidden;
  };

  if (kind == "pwl") {
    p.kind = ProblemKind::kPwl;
    const auto items = split(rest, ',');
    if (items.empty() || trim(items[0]).empty()) {
      throw InputError("pwl problem needs a fixture path");
    }
    p.fixture_path = trim(items[0]);
    for (std::size_t i = 1; i < items.size(); ++i) {
      const auto [key, value] = parse_kv(items[i]);
      if (key == "start") {
        p.start = parse_real_list(value, "start");
      } else {
        throw InputError("unknown pwl parameter '" + key + "'");
      }
    }
    return p;
  }

  if (kind == "blobs" || kind == "mnist") {
    p.kind = kind == "blobs" ? ProblemKind::kBlobs : ProblemKind::kIdx;
    for (const std::string& item : split(rest, ',')) {
      if (trim(item).empty()) continue;
      const auto [key, value] = parse_kv(item);
      if (key == "classes") {
        p.classes = static_cast<int>(parse_int(value, key));
      } else if (key == "per_class") {
        p.per_class = static_cast<int>(parse_int(value, key));
      } else if (key == "dim") {
        p.dim = static_cast<int>(parse_int(value, key));
      } else if (key == "spread") {
        p.spread = parse_real(value, key);
      } else if (key == "images") {
        p.images_path = value;
      } else if (key == "labels") {
        p.labels_path = value;
      } else if (key == "subset") {
        p.subset = parse_int(value, key);
      } else if (key == "eval_images") {
        p.eval_images_path = value;
      } else if (key == "eval_labels") {
        p.eval_labels_path = value;
      } else if (key == "eval_subset") {
        p.eval_subset = parse_int(value, key);
      } else if (key == "hidden") {
        p.hidden = parse_hidden(value);
      } else {
        throw InputError("unknown " + kind + " parameter '" + key + "'");
      }
    }
    if (p.kind == ProblemKind::kIdx &&
        (p.images_path.empty() || p.labels_path.empty())) {
      throw InputError("mnist problem needs images= and labels= paths");
    }
    return p;
  }

  throw InputError("unknown problem kind '" + kind +
                   "' (expected pwl|blobs|mnist)");
}

void validate(const RunConfig& config) {
  if (!(config.lr_or_s0 > 0.0) || !std::isfinite(config.lr_or_s0)) {
    throw InputError("lr / s0 must be > 0");
  }
  if (config.epochs < 0) throw InputError("epochs must be >= 0");
  if (config.batch_size < 1) throw InputError("batch_size must be >= 1");
  if (config.log_every < 1) throw InputError("log_every must be >= 1");
  const bool is_volume = config.optimizer == OptimizerKind::kVolume;
  if (config.alpha && !is_volume) {
    throw InputError("alpha applies to the volume optimizer only");
  }
  if (config.alpha && !(*config.alpha >= 0.0 && *config.alpha <= 1.0)) {
    throw InputError("alpha must lie in [0, 1]");
  }
  if (config.switch_step) {
    if (!is_volume) {
      throw InputError("switch_step applies to the volume optimizer only");
    }
    if (config.switch_step->first < 1) {
      throw InputError("switch_step index must be >= 1");
    }
    if (!(config.switch_step->second > 0.0)) {
      throw InputError("switch_s must be > 0");
    }
  }
  if (config.problem.kind == ProblemKind::kBlobs) {
    if (config.problem.classes < 1 || config.problem.per_class < 1 ||
        config.problem.dim < 1) {
      throw InputError("blob sizes must be positive");
    }
  }
}

namespace {

OptimizerState make_optimizer(const RunConfig& config, std::size_t n,
                              Sense sense) {
  switch (config.optimizer) {
    case OptimizerKind::kVolume:
      return volume_pending(config.lr_or_s0, config.alpha.value_or(0.1),
                            sense);
    case OptimizerKind::kMomentum:
      return momentum_init(n, config.lr_or_s0);
    case OptimizerKind::kAdam:
      return adam_init(n, config.lr_or_s0);
    case OptimizerKind::kRmsprop:
      return rmsprop_init(n, config.lr_or_s0);
  }
  throw InputError("unknown optimizer kind");
}

void flush_csv(const RunConfig& config,
               const std::vector<MetricRecord>& records) {
  if (!config.out_csv.empty()) write_metrics_csv(config.out_csv, records);
}

bool finite_all(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

RunResult run_pwl(const RunConfig& config) {
  const PwlFunction f = PwlFunction::from_file(config.problem.fixture_path);
  Vec x = config.problem.start;
  if (x.empty()) x.assign(f.dim(), 0.0);
  if (x.size() != f.dim()) {
    throw InputError("start point has dimension " + std::to_string(x.size()) +
                     ", fixture has " + std::to_string(f.dim()));
  }

  const bool is_volume = config.optimizer == OptimizerKind::kVolume;
  // The testbed maximizes f. Volume runs with maximize sense; the descent
  // baselines are fed the negated subgradient.
  OptimizerState opt = make_optimizer(config, f.dim(), Sense::kMaximize);

  RunResult out;
  PwlEval ev = f.eval(x);
  out.summary.init_loss = -ev.value;
  out.summary.best_value = ev.value;
  out.summary.best_step = 0;
  out.summary.final_loss = -ev.value;

  try {
    for (long long step = 1; step <= config.epochs; ++step) {
      if (config.switch_step && step == config.switch_step->first) {
        volume_interval_switch(std::get<VolumeState>(opt),
                               config.switch_step->second);
      }
      Vec g = f.subgradient(x);
      if (!is_volume) {
        for (double& e : g) e = -e;
      }
      const std::optional<StepReport> rep = apply(opt, g, x);
      if (!finite_all(x)) {
        throw DivergenceError("non-finite iterate", step);
      }
      ev = f.eval(x);
      if (!std::isfinite(ev.value)) {
        throw DivergenceError("non-finite objective", step);
      }
      if (ev.value > out.summary.best_value) {
        out.summary.best_value = ev.value;
        out.summary.best_step = step;
      }
      MetricRecord r;
      r.step = step;
      r.epoch = 0;
      r.train_loss = -ev.value;
      if (rep) {
        r.step_size = rep->s_after;
        r.gy = std::get<VolumeState>(opt).gy;
        r.d_norm = rep->d_norm;
      }
      out.records.push_back(r);
    }
  } catch (const DivergenceError& e) {
    out.summary.diverged = true;
    out.summary.diverged_step = e.step();
    flush_csv(config, out.records);
    throw;
  }

  out.summary.steps = config.epochs;
  out.summary.final_loss = -ev.value;
  flush_csv(config, out.records);
  return out;
}

struct NnProblem {
  Dataset train;
  std::optional<Dataset> eval;
  MlpSpec mlp;
};

NnProblem load_nn_problem(const RunConfig& config) {
  const ProblemSpec& p = config.problem;
  NnProblem out;
  if (p.kind == ProblemKind::kBlobs) {
    out.train = synthetic_blobs(p.classes, p.per_class, p.dim, p.spread,
                                config.seed);
  } else {
    out.train = take_prefix(idx_read(p.images_path, p.labels_path),
                            static_cast<std::size_t>(std::max<long long>(
                                p.subset, 0)));
    if (!p.eval_images_path.empty()) {
      out.eval = take_prefix(idx_read(p.eval_images_path, p.eval_labels_path),
                             static_cast<std::size_t>(std::max<long long>(
                                 p.eval_subset, 0)));
    }
  }
  out.mlp.layer_sizes.push_back(out.train.features);
  for (std::size_t h : p.hidden) out.mlp.layer_sizes.push_back(h);
  out.mlp.layer_sizes.push_back(static_cast<std::size_t>(out.train.classes));
  out.mlp.seed = mix_seed(config.seed, 1);
  return out;
}

RunResult run_nn(const RunConfig& config) {
  NnProblem problem = load_nn_problem(config);
  const Dataset& train = problem.train;
  if (train.count == 0) throw InputError("training set is empty");

  FlatParams params = init_params(problem.mlp);
  OptimizerState opt = make_optimizer(config, params.data.size(),
                                      Sense::kMinimize);

  std::vector<std::size_t> all_rows(train.count);
  for (std::size_t i = 0; i < train.count; ++i) all_rows[i] = i;
  const Batch full_train = gather(train, all_rows);
  std::optional<Batch> full_eval;
  if (problem.eval) {
    std::vector<std::size_t> rows(problem.eval->count);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    full_eval = gather(*problem.eval, rows);
  }

  RunResult out;
  const EvalResult init = evaluate(problem.mlp, params, full_train);
  out.summary.init_loss = init.loss;
  out.summary.final_loss = init.loss;
  out.summary.final_accuracy = init.accuracy;
  out.summary.best_accuracy = init.accuracy;

  long long global_step = 0;
  try {
    for (long long epoch = 1; epoch <= config.epochs; ++epoch) {
      const auto batches =
          minibatches(train.count, static_cast<std::size_t>(config.batch_size),
                      mix_seed(config.seed, 1000 + epoch));
      for (const auto& rows : batches) {
        ++global_step;
        if (config.switch_step && global_step == config.switch_step->first) {
          volume_interval_switch(std::get<VolumeState>(opt),
                                 config.switch_step->second);
        }
        const Batch batch = gather(train, rows);
        LossGrad lg;
        try {
          lg = loss_and_grad(problem.mlp, params, batch);
        } catch (const DivergenceError& e) {
          throw DivergenceError(e.base(), global_step);
        }
        if (!finite_all(lg.grad)) {
          throw DivergenceError("non-finite gradient", global_step);
        }
        const std::optional<StepReport> rep =
            apply(opt, lg.grad, params.data);
        if (global_step % config.log_every == 0) {
          MetricRecord r;
          r.step = global_step;
          r.epoch = epoch;
          r.train_loss = lg.loss;
          r.train_accuracy = lg.accuracy;
          if (rep) {
            r.step_size = rep->s_after;
            r.gy = std::get<VolumeState>(opt).gy;
            r.d_norm = rep->d_norm;
          }
          out.records.push_back(r);
        }
      }

      // Epoch boundary: full-train (and optional eval) metrics.
      EvalResult full;
      try {
        full = evaluate(problem.mlp, params, full_train);
      } catch (const DivergenceError& e) {
        throw DivergenceError(e.base(), global_step);
      }
      MetricRecord r;
      r.step = global_step;
      r.epoch = epoch;
      r.train_loss = full.loss;
      r.train_accuracy = full.accuracy;
      if (full_eval) {
        const EvalResult ev = evaluate(problem.mlp, params, *full_eval);
        r.eval_accuracy = ev.accuracy;
        out.summary.final_eval_accuracy = ev.accuracy;
      }
      if (const auto* vol = std::get_if<VolumeState>(&opt);
          vol && vol->initialized) {
        r.step_size = vol->s;
        r.gy = vol->gy;
        double dn = 0.0;
        for (double e : vol->d) dn += e * e;
        r.d_norm = std::sqrt(dn);
      }
      out.records.push_back(r);
      out.summary.final_loss = full.loss;
      out.summary.final_accuracy = full.accuracy;
      if (!out.summary.best_accuracy ||
          full.accuracy > *out.summary.best_accuracy) {
        out.summary.best_accuracy = full.accuracy;
      }
    }
  } catch (const DivergenceError& e) {
    out.summary.diverged = true;
    out.summary.diverged_step = e.step();
    flush_csv(config, out.records);
    throw;
  }

  out.summary.steps = global_step;
  flush_csv(config, out.records);
  return out;
}

}  // namespace

RunResult run_single(const RunConfig& config) {
  validate(config);
  if (config.problem.kind == ProblemKind::kPwl) return run_pwl(config);
  return run_nn(config);
}

const std::vector<double>& default_lr_grid() {
  static const std::vector<double> grid = {
      0.00001, 0.000025, 0.00005, 0.000075, 0.0001, 0.00025, 0.0005, 0.00075,
      0.001,   0.0025,   0.005,   0.0075,   0.01,   0.025,   0.05,   0.075,
      0.1};
  return grid;
}

namespace {

std::string run_csv_name(std::size_t index, double lr) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "run_%02zu_lr%g.csv", index, lr);
  return buf;
}

}  // namespace

SweepReport run_sweep(const SweepConfig& config) {
  validate(config.base);
  const std::vector<double>& grid =
      config.grid.empty() ? default_lr_grid() : config.grid;
  for (double lr : grid) {
    if (!(lr > 0.0)) throw InputError("grid values must be > 0");
  }
  if (config.out_dir.empty()) throw InputError("sweep needs an output dir");
  if (config.selection == SelectionMetric::kFinalEvalAccuracy &&
      config.base.problem.eval_images_path.empty()) {
    throw InputError(
        "final_eval_accuracy selection needs an eval split (eval_images=...)");
  }
  std::filesystem::create_directories(config.out_dir);

  SweepReport report;
  report.rows.resize(grid.size());

  const int workers = std::max(1, config.workers);
  std::vector<std::future<void>> wave;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    SweepRow& row = report.rows[i];
    row.lr = grid[i];
    row.seed = config.base.seed + i;
    row.csv_path = (std::filesystem::path(config.out_dir) /
                    run_csv_name(i, grid[i]))
                       .string();
    auto job = [&config, &row, i, &grid]() {
      RunConfig cfg = config.base;
      cfg.lr_or_s0 = grid[i];
      cfg.seed = config.base.seed + i;
      cfg.out_csv = row.csv_path;
      try {
        row.summary = run_single(cfg).summary;
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
      }
    };
    wave.push_back(std::async(std::launch::async, job));
    if (wave.size() == static_cast<std::size_t>(workers) ||
        i + 1 == grid.size()) {
      for (auto& f : wave) f.get();
      wave.clear();
    }
  }

  // Best row by the selection metric; ties go to the smaller lr.
  std::size_t best = grid.size();
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const SweepRow& row = report.rows[i];
    if (row.failed) continue;
    if (config.selection == SelectionMetric::kFinalEvalAccuracy &&
        !row.summary.final_eval_accuracy) {
      continue;
    }
    if (best == grid.size()) {
      best = i;
      continue;
    }
    const SweepRow& incumbent = report.rows[best];
    bool better = false;
    bool tie = false;
    if (config.selection == SelectionMetric::kFinalTrainLoss) {
      better = row.summary.final_loss < incumbent.summary.final_loss;
      tie = row.summary.final_loss == incumbent.summary.final_loss;
    } else {
      better = *row.summary.final_eval_accuracy >
               *incumbent.summary.final_eval_accuracy;
      tie = *row.summary.final_eval_accuracy ==
            *incumbent.summary.final_eval_accuracy;
    }
    if (better || (tie && row.lr < incumbent.lr)) best = i;
  }
  report.best_index = best;
  if (best < report.rows.size()) report.rows[best].best = true;

  report.summary_csv_path =
      (std::filesystem::path(config.out_dir) / "sweep_summary.csv").string();
  std::ofstream out(report.summary_csv_path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + report.summary_csv_path);
  out << "lr,final_loss,final_accuracy,best\n";
  for (const SweepRow& row : report.rows) {
    out << detail::format_g17(row.lr) << ',';
    if (!row.failed) {
      out << detail::format_g17(row.summary.final_loss);
      out << ',';
      if (row.summary.final_accuracy) {
        out << detail::format_g17(*row.summary.final_accuracy);
      }
    } else {
      out << ',';
    }
    out << ',' << (row.best ? 1 : 0) << "\n";
  }
  return report;
}

DualityReport demo_duality(const std::string& fixture_path,
                           std::span<const double> x_bar, double epsilon,
                           double radius, std::int64_t samples,
                           std::uint64_t seed, double tol) {
  const PwlFunction f = PwlFunction::from_file(fixture_path);
  DualityReport report;
  const PwlEval at = f.eval(x_bar);
  report.value = at.value;
  report.active = at.active;
  report.estimate = mc_dual_estimate(f, x_bar, epsilon, radius, samples, seed);
  const DirectionResult dir =
      improvement_direction(f, report.estimate, at.active);
  report.direction = dir.x_dir;
  double n2 = 0.0;
  for (double v : report.direction) n2 += v * v;
  report.direction_norm = std::sqrt(n2);
  report.tol = tol;
  report.optimal = optimality_check(report.direction, tol);
  return report;
}

std::string format_duality_report(const DualityReport& report) {
  std::ostringstream out;
  out << "value at point: " << report.value << "\n";
  out << "active pieces:";
  for (std::size_t i : report.active) out << ' ' << i;
  out << "\n";
  out << "dual weights (epsilon " << report.estimate.epsilon << ", radius "
      << report.estimate.radius << ", samples " << report.estimate.samples
      << ", seed " << report.estimate.seed << "):\n";
  for (std::size_t k = 0; k < report.estimate.pieces.size(); ++k) {
    out << "  piece " << report.estimate.pieces[k] << ": lambda = "
        << report.estimate.lambda[k] << "\n";
  }
  out << "direction: (";
  for (std::size_t j = 0; j < report.direction.size(); ++j) {
    if (j) out << ", ";
    out << report.direction[j];
  }
  out << ")  norm " << report.direction_norm << "\n";
  out << "optimal within tol " << report.tol << ": "
      << (report.optimal ? "yes" : "no") << "\n";
  return out.str();
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("expected key = value on line " +
                       std::to_string(lineno) + " of " + path);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ParseError("empty key on line " + std::to_string(lineno) + " of " +
                       path);
    }
    kv[key] = value;
  }
  return kv;
}

void apply_config(const std::map<std::string, std::string>& kv,
                  RunConfig& config) {
  std::optional<long long> switch_step;
  std::optional<double> switch_s;
  for (const auto& [key, value] : kv) {
    if (key == "problem") {
      config.problem = parse_problem(value);
    } else if (key == "optimizer") {
      config.optimizer = optimizer_kind_from_name(value);
    } else if (key == "lr" || key == "s0") {
      config.lr_or_s0 = parse_real(value, key);
    } else if (key == "alpha") {
      config.alpha = parse_real(value, key);
    } else if (key == "epochs") {
      config.epochs = parse_int(value, key);
    } else if (key == "batch_size") {
      config.batch_size = parse_int(value, key);
    } else if (key == "seed") {
      config.seed = static_cast<std::uint64_t>(parse_int(value, key));
    } else if (key == "switch_step") {
      switch_step = parse_int(value, key);
    } else if (key == "switch_s") {
      switch_s = parse_real(value, key);
    } else if (key == "out") {
      config.out_csv = value;
    } else if (key == "log_every") {
      config.log_every = parse_int(value, key);
    } else {
      throw InputError("unknown config key '" + key + "'");
    }
  }
  if (switch_step.has_value() != switch_s.has_value()) {
    throw InputError("switch_step and switch_s must be given together");
  }
  if (switch_step) config.switch_step = {{*switch_step, *switch_s}};
}

}  // namespace volalg
