#include "dpbl/cli/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace dpbl::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(ch);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out.push_back(',');
    out += cells[i];
  }
  return out;
}

const std::vector<std::string>& report_header() {
  static const std::vector<std::string> header = [] {
    std::vector<std::string> h{"seed", "status"};
    for (const std::string& c : report_numeric_columns()) h.push_back(c);
    return h;
  }();
  return header;
}

void require_header(const CsvTable& t, const std::vector<std::string>& expected, const char* what) {
  if (t.header != expected) {
    throw std::runtime_error(fmt::format("{}: unexpected columns '{}'", what, join(t.header)));
  }
}

std::uint64_t parse_seed(const std::string& cell) {
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || end != cell.data() + cell.size()) {
    throw std::runtime_error(fmt::format("bad seed '{}'", cell));
  }
  return v;
}

Aggregate aggregate(const BenchmarkReport& r, const char* label, bool take_max) {
  const std::size_t nc = report_numeric_columns().size();
  std::vector<double> acc(nc, take_max ? -std::numeric_limits<double>::infinity() : 0.0);
  std::vector<int> count(nc, 0);
  for (const RunRow& row : r.rows) {
    const std::vector<double> v = numeric_values(row);
    for (std::size_t c = 0; c < nc; ++c) {
      if (std::isnan(v[c])) continue;
      acc[c] = take_max ? std::max(acc[c], v[c]) : acc[c] + v[c];
      ++count[c];
    }
  }
  for (std::size_t c = 0; c < nc; ++c) {
    if (count[c] == 0) acc[c] = kNaN;
    else if (!take_max) acc[c] /= count[c];
  }
  return Aggregate{label, std::move(acc)};
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

CsvTable read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSchemaLine) {
    throw std::runtime_error("csv: missing schema line");
  }
  CsvTable t;
  if (!std::getline(in, line)) throw std::runtime_error("csv: missing header row");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells = split(line);
    if (cells.size() != t.header.size()) {
      throw std::runtime_error(fmt::format("csv: row has {} cells, header has {}", cells.size(),
                                           t.header.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

void write_csv(std::ostream& out, const CsvTable& t) {
  out << kSchemaLine << '\n' << join(t.header) << '\n';
  for (const auto& row : t.rows) out << join(row) << '\n';
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

double parse_number(const std::string& cell) {
  if (cell.empty()) return kNaN;
  double v = 0.0;
  const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || end != cell.data() + cell.size()) {
    throw std::runtime_error(fmt::format("csv: bad number '{}'", cell));
  }
  return v;
}

RunRow make_row(std::uint64_t seed, const ObfuscationRun& run) {
  const ObfuscationMetrics& m = run.metrics;
  RunRow r;
  r.seed = seed;
  r.status = to_string(run.result.status);
  r.oracle_calls = m.oracle_calls;
  r.wall_ms = m.wall_ms;
  r.delta_star = run.result.released() ? run.result.delta_star : kNaN;
  r.cost_err_bl_pct = 100.0 * m.cost_err_bl;
  r.cost_err_hpr_pct = 100.0 * m.cost_err_hpr;
  r.dist_bl = m.dist_bl;
  r.dist_hpr = m.dist_hpr;
  r.dist_laplace = m.dist_laplace;
  r.abs_dist_bl = m.abs_dist_bl;
  r.abs_dist_hpr = m.abs_dist_hpr;
  r.abs_dist_laplace = m.abs_dist_laplace;
  r.thm2_ratio = m.theorem2_ratio;
  return r;
}

const std::vector<std::string>& report_numeric_columns() {
  static const std::vector<std::string> cols{
      "oracle_calls", "delta_star",  "cost_err_bl_pct", "cost_err_hpr_pct",
      "dist_bl",      "dist_hpr",    "dist_laplace",    "abs_dist_bl",
      "abs_dist_hpr", "abs_dist_laplace", "thm2_ratio"};
  return cols;
}

std::vector<double> numeric_values(const RunRow& r) {
  return {static_cast<double>(r.oracle_calls), r.delta_star, r.cost_err_bl_pct,
          r.cost_err_hpr_pct, r.dist_bl, r.dist_hpr, r.dist_laplace, r.abs_dist_bl,
          r.abs_dist_hpr, r.abs_dist_laplace, r.thm2_ratio.value_or(kNaN)};
}

Aggregate BenchmarkReport::mean() const { return aggregate(*this, "mean", false); }
Aggregate BenchmarkReport::max() const { return aggregate(*this, "max", true); }

void write_report(std::ostream& out, const BenchmarkReport& report) {
  CsvTable t;
  t.header = report_header();
  for (const RunRow& r : report.rows) {
    std::vector<std::string> cells{std::to_string(r.seed), r.status};
    for (double v : numeric_values(r)) cells.push_back(format_number(v));
    if (!r.thm2_ratio) cells.back().clear();
    t.rows.push_back(std::move(cells));
  }
  for (const Aggregate& a : {report.mean(), report.max()}) {
    std::vector<std::string> cells{a.label, ""};
    for (double v : a.values) cells.push_back(format_number(v));
    t.rows.push_back(std::move(cells));
  }
  write_csv(out, t);
}

ParsedReport read_report(std::istream& in) {
  const CsvTable t = read_csv(in);
  require_header(t, report_header(), "report");
  ParsedReport out;
  for (const auto& cells : t.rows) {
    if (cells[0] == "mean" || cells[0] == "max") {
      Aggregate a{cells[0], {}};
      for (std::size_t c = 2; c < cells.size(); ++c) a.values.push_back(parse_number(cells[c]));
      out.aggregates.push_back(std::move(a));
      continue;
    }
    RunRow r;
    r.seed = parse_seed(cells[0]);
    r.status = cells[1];
    std::size_t c = 2;
    r.oracle_calls = static_cast<int>(parse_number(cells[c++]));
    for (double* f : {&r.delta_star, &r.cost_err_bl_pct, &r.cost_err_hpr_pct, &r.dist_bl,
                      &r.dist_hpr, &r.dist_laplace, &r.abs_dist_bl, &r.abs_dist_hpr,
                      &r.abs_dist_laplace}) {
      *f = parse_number(cells[c++]);
    }
    if (!cells[c].empty()) r.thm2_ratio = parse_number(cells[c]);
    out.report.rows.push_back(std::move(r));
  }
  return out;
}

void write_timing(std::ostream& out, const BenchmarkReport& report) {
  CsvTable t;
  t.header = {"seed", "wall_ms"};
  for (const RunRow& r : report.rows) {
    t.rows.push_back({std::to_string(r.seed), format_number(r.wall_ms)});
  }
  write_csv(out, t);
}

void write_trace(std::ostream& out, const BilevelResult& result) {
  CsvTable t;
  t.header = {"iter",   "delta_low",     "delta_high", "delta_mid", "delta_up",
              "pushup_m", "follower_cost", "branch",     "phase"};
  auto emit = [&](const IterationRecord& it, const char* phase) {
    t.rows.push_back({std::to_string(it.iter), format_number(it.delta_low),
                      format_number(it.delta_high), format_number(it.delta_mid),
                      format_number(it.delta_up), format_number(it.pushup_objective),
                      format_number(it.follower_cost), to_string(it.branch), phase});
  };
  for (const IterationRecord& it : result.probes) emit(it, "doubling");
  for (const IterationRecord& it : result.trace) emit(it, "bisection");
  write_csv(out, t);
}

void write_probe(std::ostream& out, const std::vector<ProbeRow>& rows) {
  CsvTable t;
  t.header = {"delta", "feasible", "delta_up", "pushup_m", "follower_cost", "in_band"};
  for (const ProbeRow& r : rows) {
    t.rows.push_back({format_number(r.delta), r.feasible ? "1" : "0",
                      format_number(r.delta_up), format_number(r.proxy),
                      format_number(r.follower_cost), r.in_band ? "1" : "0"});
  }
  write_csv(out, t);
}

std::vector<ProbeRow> read_probe(std::istream& in) {
  const CsvTable t = read_csv(in);
  require_header(t, {"delta", "feasible", "delta_up", "pushup_m", "follower_cost", "in_band"},
                 "probe");
  std::vector<ProbeRow> rows;
  for (const auto& c : t.rows) {
    rows.push_back(ProbeRow{parse_number(c[0]), c[1] == "1", parse_number(c[2]),
                            parse_number(c[3]), parse_number(c[4]), c[5] == "1"});
  }
  return rows;
}

}  // namespace dpbl::cli
