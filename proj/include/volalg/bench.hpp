#ifndef VOLALG_BENCH_HPP
#define VOLALG_BENCH_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "volalg/metrics.hpp"
#include "volalg/optimizers.hpp"
#include "volalg/pwl.hpp"

namespace volalg {

enum class OptimizerKind { kVolume, kMomentum, kAdam, kRmsprop };

OptimizerKind optimizer_kind_from_name(const std::string& name);
std::string optimizer_kind_name(OptimizerKind kind);

enum class ProblemKind { kPwl, kBlobs, kIdx };

/// Parsed problem description. Text forms:
///   pwl:<fixture path>[,start=v;v;...]
///   blobs:classes=2,per_class=100,dim=8,spread=0.1[,hidden=16[;16...]]
///   mnist:images=<path>,labels=<path>[,subset=N][,hidden=32]
///         [,eval_images=<path>,eval_labels=<path>[,eval_subset=N]]
struct ProblemSpec {
  ProblemKind kind = ProblemKind::kBlobs;
  std::string text;  // original problem string, echoed in reports

  // pwl
  std::string fixture_path;
  Vec start;  // empty = origin

  // blobs
  int classes = 2;
  int per_class = 100;
  int dim = 8;
  double spread = 0.1;

  // idx-backed (mnist-format files)
  std::string images_path, labels_path;
  long long subset = 0;  // 0 = all examples
  std::string eval_images_path, eval_labels_path;
  long long eval_subset = 0;

  // MLP hidden layer sizes for the NN problems
  std::vector<std::size_t> hidden = {32};
};

ProblemSpec parse_problem(const std::string& text);

/// One benchmark run. For PWL problems `epochs` counts subgradient steps
/// and `batch_size` is ignored; every step is logged. NN problems log every
/// `log_every` steps plus a full-train evaluation at each epoch boundary.
struct RunConfig {
  ProblemSpec problem;
  OptimizerKind optimizer = OptimizerKind::kVolume;
  double lr_or_s0 = 0.001;
  std::optional<double> alpha;  // Volume only; defaults to 0.1
  long long epochs = 1;
  long long batch_size = 32;
  std::uint64_t seed = 1;
  std::optional<std::pair<long long, double>> switch_step;  // Volume only
  std::string out_csv;  // empty = no file written
  long long log_every = 10;
};

/// Validates optimizer-specific fields; throws InputError on misuse
/// (alpha or switch_step with a non-Volume optimizer, bad sizes).
void validate(const RunConfig& config);

struct RunSummary {
  long long steps = 0;
  double init_loss = 0.0;
  double final_loss = 0.0;
  std::optional<double> final_accuracy;
  std::optional<double> best_accuracy;      // best full-train accuracy seen
  std::optional<double> final_eval_accuracy;
  double best_value = 0.0;   // PWL: best objective seen
  long long best_step = 0;   // PWL: step attaining best_value
  bool diverged = false;
  long long diverged_step = 0;
};

struct RunResult {
  std::vector<MetricRecord> records;
  RunSummary summary;
};

/// Executes one run. Writes config.out_csv when set; on divergence the
/// partial CSV is flushed before DivergenceError is thrown.
RunResult run_single(const RunConfig& config);

/// The 17-value learning-rate grid used for all sweeps by default.
const std::vector<double>& default_lr_grid();

enum class SelectionMetric { kFinalTrainLoss, kFinalEvalAccuracy };

struct SweepConfig {
  RunConfig base;
  std::vector<double> grid;  // empty = default_lr_grid()
  SelectionMetric selection = SelectionMetric::kFinalTrainLoss;
  std::string out_dir;  // per-run CSVs and sweep_summary.csv land here
  int workers = 2;      // parallel runs
};

struct SweepRow {
  double lr = 0.0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  bool best = false;
  RunSummary summary;  // valid when !failed
  std::string csv_path;
};

struct SweepReport {
  std::vector<SweepRow> rows;  // grid order
  std::size_t best_index = 0;
  std::string summary_csv_path;
};

/// Runs run_single per grid value (seed = base.seed + index), writes one CSV
/// per value plus sweep_summary.csv (lr, final loss, final accuracy, best
/// flag; exactly one best row, ties broken toward the lower lr). Individual
/// run failures are recorded and the sweep continues.
SweepReport run_sweep(const SweepConfig& config);

/// Duality demo on a 2-D fixture: active pieces, estimated dual weights,
/// combined direction, optimality verdict.
struct DualityReport {
  double value = 0.0;
  std::vector<std::size_t> active;
  DualEstimate estimate;
  Vec direction;
  double direction_norm = 0.0;
  double tol = 0.0;
  bool optimal = false;
};

DualityReport demo_duality(const std::string& fixture_path,
                           std::span<const double> x_bar, double epsilon,
                           double radius, std::int64_t samples,
                           std::uint64_t seed, double tol);

std::string format_duality_report(const DualityReport& report);

/// Line-oriented "key = value" config file with '#' comments. Returned in
/// file order; later duplicates override earlier ones.
std::map<std::string, std::string> parse_config_file(const std::string& path);

/// Applies config-file keys onto a RunConfig (problem, optimizer, lr, s0,
/// alpha, epochs, batch_size, seed, switch_step, switch_s, out, log_every).
/// Unknown keys throw InputError.
void apply_config(const std::map<std::string, std::string>& kv,
                  RunConfig& config);

}  // namespace volalg

#endif  // VOLALG_BENCH_HPP
