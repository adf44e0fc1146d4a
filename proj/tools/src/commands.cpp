#include "dpbl/cli/commands.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>
#include <ostream>
#include <thread>

#include "dpbl/bilevel.hpp"
#include "dpbl/cli/matpower.hpp"
#include "dpbl/dcopf.hpp"
#include "dpbl/laplace.hpp"

namespace dpbl::cli {

namespace {

// Raised when the case itself admits no dispatch at its own demands.
class InfeasibleCase : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

DcOpfInstance instance(const Network& net, CostTarget target, double beta) {
  DcOpfInstance inst;
  inst.network = net;
  inst.cost_target = target;
  inst.beta = beta;
  return inst;
}

// The follower alone; target and band are irrelevant to it.
FollowerResult solve_case(const Case& c) {
  return DcOpfProblem(instance(c.network, {}, 1.0)).follower(c.demand);
}

struct Prepared {
  Case base;
  PrivacyParams params;
  std::unique_ptr<DcOpfProblem> problem;
};

Prepared prepare(const RunConfig& config) {
  config.validate();
  Prepared p;
  p.base = read_matpower(config.case_path);
  const FollowerResult o = solve_case(p.base);
  if (!o.optimal()) {
    throw InfeasibleCase(fmt::format("follower is {} at the case demands", to_string(o.status)));
  }
  CostTarget target;
  target.f_tilde = config.f_tilde.value_or(o.objective);
  target.source = config.f_tilde ? CostSource::PrivateEstimate : CostSource::Public;
  const double beta = config.beta ? *config.beta
                                  : *config.beta_percent / 100.0 * std::abs(target.f_tilde);
  if (!(beta > 0)) throw UsageError(fmt::format("beta must be positive (got {})", beta));
  p.params = config.privacy;
  p.params.beta = beta;
  p.params.validate();
  spdlog::info("case {}: {} buses, {} demands, f_tilde={} beta={}", config.case_path.string(),
               p.base.network.buses.size(), p.base.demand.size(), target.f_tilde, beta);
  p.problem = std::make_unique<DcOpfProblem>(instance(p.base.network, target, beta));
  if (config.dump_lp) {
    std::filesystem::create_directories(*config.dump_lp);
    p.problem->set_dump_dir(*config.dump_lp);
  }
  return p;
}

std::ofstream open_output(const RunConfig& config, const std::string& name) {
  std::filesystem::create_directories(config.output_dir);
  const auto path = config.output_dir / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  return out;
}

// Maps exceptions from the shared setup to exit codes.
template <class F>
int guarded(std::ostream& out, F&& body) {
  try {
    return body();
  } catch (const CaseError& e) {
    out << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const InfeasibleCase& e) {
    out << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const UsageError& e) {
    out << "usage: " << e.what() << '\n';
    return kExitUsage;
  }
}

ObfuscationRun one_run(const Prepared& p, std::uint64_t seed) {
  PrivacyParams params = p.params;
  params.seed = seed;
  ObfuscationRun run = run_obfuscation(*p.problem, p.base.demand, params);
  spdlog::info("seed {}: {} after {} oracle calls", seed, to_string(run.result.status),
               run.result.oracle_calls);
  for (const IterationRecord& it : run.result.trace) {
    spdlog::debug("seed {} iter {}: [{}, {}] mid={} {}", seed, it.iter, it.delta_low,
                  it.delta_high, it.delta_mid, to_string(it.branch));
  }
  return run;
}

}  // namespace

void RunConfig::validate() const {
  if (runs < 1) throw UsageError("runs must be at least 1");
  if (jobs < 1) throw UsageError("jobs must be at least 1");
  if (beta.has_value() == beta_percent.has_value()) {
    throw UsageError("give exactly one of --beta and --beta-pct");
  }
}

int cmd_solve(const RunConfig& config, std::ostream& out) {
  try {
    const Case c = read_matpower(config.case_path);
    const FollowerResult o = solve_case(c);
    const int code = o.optimal() ? kExitOk
                     : o.status == FollowerStatus::Infeasible ? kExitInfeasible
                                                              : kExitFailure;
    if (config.json) {
      nlohmann::json j;
      j["status"] = to_string(o.status);
      j["objective"] = o.optimal() ? nlohmann::json(o.objective) : nlohmann::json(nullptr);
      j["dispatch"] = o.optimal() ? nlohmann::json(o.dispatch) : nlohmann::json::array();
      out << j.dump() << '\n';
      return code;
    }
    out << "status: " << to_string(o.status) << '\n';
    if (!o.optimal()) return code;
    out << "objective: " << format_number(o.objective) << '\n';
    for (std::size_t g = 0; g < o.dispatch.size(); ++g) {
      const int bus = c.network.buses[static_cast<std::size_t>(c.network.generators[g].bus)].id;
      out << fmt::format("gen {} (bus {}): {} p.u.\n", g + 1, bus, format_number(o.dispatch[g]));
    }
    return code;
  } catch (const CaseError& e) {
    out << "error: " << e.what() << '\n';
    return kExitParse;
  }
}

BenchmarkReport run_benchmark(const RunConfig& config) {
  const Prepared p = prepare(config);
  std::vector<RunRow> rows(static_cast<std::size_t>(config.runs));
  auto work = [&](int first) {
    for (int i = first; i < config.runs; i += config.jobs) {
      const std::uint64_t seed = config.privacy.seed + static_cast<std::uint64_t>(i);
      rows[static_cast<std::size_t>(i)] = make_row(seed, one_run(p, seed));
    }
  };
  if (config.jobs == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (int k = 0; k < config.jobs; ++k) pool.emplace_back(work, k);
  }
  return BenchmarkReport{std::move(rows)};
}

int cmd_benchmark(const RunConfig& config, std::ostream& out) {
  return guarded(out, [&] {
    const BenchmarkReport report = run_benchmark(config);
    {
      std::ofstream f = open_output(config, "report.csv");
      write_report(f, report);
    }
    {
      std::ofstream f = open_output(config, "timing.csv");
      write_timing(f, report);
    }
    const auto& cols = report_numeric_columns();
    const Aggregate mean = report.mean();
    const Aggregate max = report.max();
    out << fmt::format("{} runs from seed {}\n", report.rows.size(), config.privacy.seed);
    for (std::size_t c = 0; c < cols.size(); ++c) {
      out << fmt::format("{:>18}  mean {:<24} max {}\n", cols[c], format_number(mean.values[c]),
                         format_number(max.values[c]));
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_obfuscate(const RunConfig& config, std::ostream& out) {
  return guarded(out, [&] {
    const Prepared p = prepare(config);
    BenchmarkReport report;
    bool infeasible = false, capped = false, failed = false;
    for (int i = 0; i < config.runs; ++i) {
      const std::uint64_t seed = config.privacy.seed + static_cast<std::uint64_t>(i);
      const ObfuscationRun run = one_run(p, seed);
      const BilevelResult& r = run.result;
      {
        std::ofstream f = open_output(config, fmt::format("trace_{}.csv", seed));
        write_trace(f, r);
      }
      if (r.released()) {
        std::ofstream f = open_output(config, fmt::format("released_case_{}.m", seed));
        f << emit_matpower(p.base.network, r.d_star, fmt::format("released_case_{}", seed));
      }
      infeasible |= r.status == BilevelStatus::Infeasible;
      capped |= r.status == BilevelStatus::OracleCapHit;
      failed |= r.status == BilevelStatus::SolverFailure;
      out << fmt::format("seed {}: {}  d*=[{}]  O(d*)={}  delta*={}  oracle_calls={}", seed,
                         to_string(r.status), fmt::join(r.d_star.values(), ", "),
                         format_number(r.cost), format_number(r.delta_star), r.oracle_calls);
      if (!r.message.empty()) out << "  (" << r.message << ')';
      out << '\n';
      report.rows.push_back(make_row(seed, run));
    }
    std::ofstream f = open_output(config, "report.csv");
    write_report(f, report);
    if (infeasible) return static_cast<int>(kExitInfeasible);
    if (capped) return static_cast<int>(kExitOracleCap);
    if (failed) return static_cast<int>(kExitFailure);
    return static_cast<int>(kExitOk);
  });
}

std::vector<ProbeRow> run_probe(const RunConfig& config) {
  if (config.delta_grid.empty()) throw UsageError("--delta-grid must not be empty");
  if (!std::is_sorted(config.delta_grid.begin(), config.delta_grid.end()) ||
      config.delta_grid.front() < 0) {
    throw UsageError("--delta-grid must be nonnegative and ascending");
  }
  const Prepared p = prepare(config);
  DemandVector d_tilde;
  if (config.d_tilde) {
    d_tilde = DemandVector(*config.d_tilde, DemandRole::Noisy);
  } else {
    LaplaceNoise noise = LaplaceNoise::for_params(p.params);
    d_tilde = obfuscate_demands(p.base.demand, p.params, noise);
  }
  if (d_tilde.size() != p.base.demand.size()) {
    throw UsageError(fmt::format("--d-tilde needs {} entries", p.base.demand.size()));
  }
  std::vector<ProbeRow> rows;
  for (double delta : config.delta_grid) {
    ProbeRow row;
    row.delta = delta;
    const LeaderPoint up = p.problem->push_up(d_tilde, delta);
    if (up.optimal()) {
      const FollowerResult o = p.problem->follower(up.demand);
      row.feasible = o.optimal();
      row.delta_up = l2sq_distance(up.demand, d_tilde);
      row.proxy = p.problem->proxy(up.demand);
      row.follower_cost = o.optimal() ? o.objective : std::nan("");
      row.in_band = o.optimal() && p.problem->in_band(o.objective, kCertificateTol);
    } else {
      row.delta_up = row.proxy = row.follower_cost = std::nan("");
    }
    rows.push_back(row);
  }
  return rows;
}

std::optional<std::pair<std::size_t, std::size_t>> first_decrease(
    const std::vector<ProbeRow>& rows, double tol) {
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].feasible) continue;
    if (prev && rows[i].follower_cost < rows[*prev].follower_cost - tol) {
      return std::make_pair(*prev, i);
    }
    prev = i;
  }
  return std::nullopt;
}

int cmd_probe_monotonicity(const RunConfig& config, std::ostream& out) {
  return guarded(out, [&] {
    const std::vector<ProbeRow> rows = run_probe(config);
    std::ofstream f = open_output(config, "probe.csv");
    write_probe(f, rows);
    out << "delta,delta_up,pushup_m,follower_cost,in_band\n";
    for (const ProbeRow& r : rows) {
      if (!r.feasible) {
        out << format_number(r.delta) << ",infeasible\n";
        continue;
      }
      out << fmt::format("{},{},{},{},{}\n", format_number(r.delta), format_number(r.delta_up),
                         format_number(r.proxy), format_number(r.follower_cost), r.in_band);
    }
    if (const auto bad = first_decrease(rows)) {
      out << fmt::format("non-monotone: O(d_up) drops from {} at delta={} to {} at delta={}\n",
                         format_number(rows[bad->first].follower_cost),
                         format_number(rows[bad->first].delta),
                         format_number(rows[bad->second].follower_cost),
                         format_number(rows[bad->second].delta));
    } else {
      out << "monotone: O(d_up) is non-decreasing over the grid\n";
    }
    return static_cast<int>(kExitOk);
  });
}

}  // namespace dpbl::cli
