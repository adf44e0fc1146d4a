#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dpbl/bilevel.hpp"

namespace dpbl::cli {

/// First line of every CSV the tool writes.
inline constexpr const char* kSchemaLine = "# dp-bilevel v1";

/// Header plus string cells; what read_csv hands back for any emitted file.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

/// Rejects input without the schema line or with ragged rows.
CsvTable read_csv(std::istream& in);
void write_csv(std::ostream& out, const CsvTable& table);

/// Shortest round-trip text for a double; "nan" and "inf" spelled out.
std::string format_number(double v);
double parse_number(const std::string& cell);

struct RunRow {
  std::uint64_t seed = 0;
  std::string status;
  int oracle_calls = 0;
  double wall_ms = 0.0;
  double delta_star = 0.0;
  double cost_err_bl_pct = 0.0;
  double cost_err_hpr_pct = 0.0;
  double dist_bl = 0.0;
  double dist_hpr = 0.0;
  double dist_laplace = 0.0;
  double abs_dist_bl = 0.0;
  double abs_dist_hpr = 0.0;
  double abs_dist_laplace = 0.0;
  std::optional<double> thm2_ratio;
};

RunRow make_row(std::uint64_t seed, const ObfuscationRun& run);

/// Aggregate over the numeric report columns. NaN entries and missing
/// ratios are skipped; a column with no finite entry aggregates to NaN.
struct Aggregate {
  std::string label;  // "mean" or "max"
  std::vector<double> values;  // in report_numeric_columns() order
};

struct BenchmarkReport {
  std::vector<RunRow> rows;

  Aggregate mean() const;
  Aggregate max() const;
};

const std::vector<std::string>& report_numeric_columns();
std::vector<double> numeric_values(const RunRow& row);

/// report.csv: one row per run, then the mean and max rows (seed column
/// holds the label). Wall time is left out so the file is reproducible.
void write_report(std::ostream& out, const BenchmarkReport& report);

struct ParsedReport {
  BenchmarkReport report;
  std::vector<Aggregate> aggregates;
};
ParsedReport read_report(std::istream& in);

/// timing.csv: seed and wall_ms per run.
void write_timing(std::ostream& out, const BenchmarkReport& report);

/// Bisection trace with the doubling probes first; phase names the stage.
void write_trace(std::ostream& out, const BilevelResult& result);

struct ProbeRow {
  double delta = 0.0;
  bool feasible = false;
  double delta_up = 0.0;
  double proxy = 0.0;
  double follower_cost = 0.0;
  bool in_band = false;
};

void write_probe(std::ostream& out, const std::vector<ProbeRow>& rows);
std::vector<ProbeRow> read_probe(std::istream& in);

}  // namespace dpbl::cli
