#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dpbl/cli/report.hpp"
#include "dpbl/types.hpp"

namespace dpbl::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,  // solver breakdown
  kExitParse = 2,
  kExitInfeasible = 3,
  kExitOracleCap = 4,
  kExitUsage = 64,
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::filesystem::path case_path;
  PrivacyParams privacy;
  std::optional<double> beta;          // absolute
  std::optional<double> beta_percent;  // of f_tilde
  int runs = 1;
  /// Overrides f_tilde = O(d_orig).
  std::optional<double> f_tilde;
  std::vector<double> delta_grid;
  /// Probe centre; drawn from the Laplace mechanism when absent.
  std::optional<std::vector<double>> d_tilde;
  std::filesystem::path output_dir = ".";
  bool json = false;
  std::optional<std::filesystem::path> dump_lp;
  int jobs = 1;

  /// Throws UsageError.
  void validate() const;
};

/// Each command prints a human summary to `out`, writes its files under
/// config.output_dir and returns an ExitCode. Case errors map to kExitParse.
int cmd_solve(const RunConfig& config, std::ostream& out);
int cmd_obfuscate(const RunConfig& config, std::ostream& out);
int cmd_benchmark(const RunConfig& config, std::ostream& out);
int cmd_probe_monotonicity(const RunConfig& config, std::ostream& out);

/// The benchmark loop without any file output; seeds run from
/// config.privacy.seed upwards.
BenchmarkReport run_benchmark(const RunConfig& config);

/// The probe curve without file output.
std::vector<ProbeRow> run_probe(const RunConfig& config);

/// First pair of consecutive feasible rows (by index) whose follower cost
/// drops by more than tol.
std::optional<std::pair<std::size_t, std::size_t>> first_decrease(const std::vector<ProbeRow>& rows,
                                                                  double tol = 1e-6);

}  // namespace dpbl::cli
