#ifndef VOLALG_METRICS_HPP
#define VOLALG_METRICS_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace volalg {

/// One logged training step. Optional fields print as empty CSV cells when
/// they do not apply (accuracy for PWL runs, the Volume columns for the
/// baseline optimizers, eval accuracy without an eval split).
struct MetricRecord {
  long long step = 0;
  long long epoch = 0;
  double train_loss = 0.0;
  std::optional<double> train_accuracy;
  std::optional<double> eval_accuracy;
  std::optional<double> step_size;
  std::optional<double> gy;
  std::optional<double> d_norm;
};

/// Fixed schema: step,epoch,train_loss,train_accuracy,eval_accuracy,
/// step_size,gy,d_norm. Numbers are printed with 17 significant digits, so
/// identical runs produce byte-identical files.
extern const char* const kMetricsCsvHeader;

std::string format_metric_row(const MetricRecord& r);
void write_metrics_csv(const std::string& path,
                       std::span<const MetricRecord> records);

/// Parses a metrics CSV back; throws ParseError on a schema or field error.
std::vector<MetricRecord> read_metrics_csv(const std::string& path);

}  // namespace volalg

#endif  // VOLALG_METRICS_HPP
