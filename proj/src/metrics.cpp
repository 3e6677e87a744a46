#include "volalg/metrics.hpp"

#include <fstream>
#include <sstream>

#include "format_util.hpp"
#include "volalg/errors.hpp"

namespace volalg {

const char* const kMetricsCsvHeader =
    "step,epoch,train_loss,train_accuracy,eval_accuracy,step_size,gy,d_norm";

namespace {

void append_opt(std::string& row, const std::optional<double>& v) {
  row += ',';
  if (v) row += detail::format_g17(*v);
}

std::optional<double> parse_opt(const std::string& cell, const char* field,
                                std::size_t line) {
  if (cell.empty()) return std::nullopt;
  double v = 0.0;
  if (!detail::parse_double(cell, v)) {
    throw ParseError("bad " + std::string(field) + " on CSV line " +
                     std::to_string(line));
  }
  return v;
}

}  // namespace

std::string format_metric_row(const MetricRecord& r) {
  std::string row = std::to_string(r.step);
  row += ',';
  row += std::to_string(r.epoch);
  row += ',';
  row += detail::format_g17(r.train_loss);
  append_opt(row, r.train_accuracy);
  append_opt(row, r.eval_accuracy);
  append_opt(row, r.step_size);
  append_opt(row, r.gy);
  append_opt(row, r.d_norm);
  return row;
}

void write_metrics_csv(const std::string& path,
                       std::span<const MetricRecord> records) {
  std::ofstream out(path, std::ios::binary);  // no platform newline mangling
  if (!out) throw ParseError("cannot write CSV: " + path);
  out << kMetricsCsvHeader << "\n";
  for (const auto& r : records) out << format_metric_row(r) << "\n";
}

std::vector<MetricRecord> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open CSV: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsCsvHeader) {
    throw ParseError("unexpected CSV header in " + path);
  }
  std::vector<MetricRecord> records;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    if (cells.size() != 8) {
      throw ParseError("expected 8 CSV fields on line " +
                       std::to_string(lineno) + " of " + path);
    }
    MetricRecord r;
    try {
      r.step = std::stoll(cells[0]);
      r.epoch = std::stoll(cells[1]);
    } catch (const std::exception&) {
      throw ParseError("bad step/epoch on CSV line " + std::to_string(lineno));
    }
    double loss = 0.0;
    if (!detail::parse_double(cells[2], loss)) {
      throw ParseError("bad train_loss on CSV line " + std::to_string(lineno));
    }
    r.train_loss = loss;
    r.train_accuracy = parse_opt(cells[3], "train_accuracy", lineno);
    r.eval_accuracy = parse_opt(cells[4], "eval_accuracy", lineno);
    r.step_size = parse_opt(cells[5], "step_size", lineno);
    r.gy = parse_opt(cells[6], "gy", lineno);
    r.d_norm = parse_opt(cells[7], "d_norm", lineno);
    records.push_back(r);
  }
  return records;
}

}  // namespace volalg
