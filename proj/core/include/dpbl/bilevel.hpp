#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dpbl/laplace.hpp"
#include "dpbl/types.hpp"

namespace dpbl {

enum class BilevelStatus { Converged, FastPath, OracleCapHit, Infeasible, SolverFailure };

enum class Branch { UpperUpdated, LowerUpdated, PushUpInfeasible };

const char* to_string(BilevelStatus status);
const char* to_string(Branch branch);

/// One push-up probe. delta_low/delta_high hold the bounds after the update.
struct IterationRecord {
  int iter = 0;
  double delta_low = 0.0;
  double delta_high = 0.0;
  double delta_mid = 0.0;
  double delta_up = 0.0;  // ||d_up - d_tilde||^2, NaN when the push-up is infeasible
  double pushup_objective = 0.0;
  double follower_cost = 0.0;
  Branch branch = Branch::LowerUpdated;
  std::vector<double> d_up;
};

struct BilevelResult {
  DemandVector d_star;
  double delta_star = 0.0;
  double cost = 0.0;
  BilevelStatus status = BilevelStatus::Infeasible;
  std::vector<IterationRecord> trace;   // bisection steps
  std::vector<IterationRecord> probes;  // doubling steps
  int oracle_calls = 0;
  double hpr_distance_sq = 0.0;
  std::optional<DemandVector> hpr_point;
  std::string message;

  /// Released vector satisfies the cost band.
  bool released() const {
    return status == BilevelStatus::Converged || status == BilevelStatus::FastPath;
  }
};

/// Tolerance absorbed into the non-strict certificate O(d_up) >= f - beta.
inline constexpr double kCertificateTol = 1e-9;

/// Returns d_tilde itself when its follower cost already lies in the band.
/// A follower NumericFailure comes back as a SolverFailure result.
std::optional<BilevelResult> fast_path(const ParametricProblem& problem,
                                       const DemandVector& d_tilde);

/// Outcome of the relaxation plus doubling phase.
struct InitialBounds {
  BilevelStatus status = BilevelStatus::Converged;  // Converged means usable bounds
  DistanceBudget bounds;
  LeaderPoint hpr;
  std::optional<LeaderPoint> certified;  // push-up point at delta_high
  double certified_cost = 0.0;
  std::vector<IterationRecord> probes;
  int oracle_calls = 0;
  std::string message;
};

/// delta_low from the high point relaxation, delta_high by doubling from
/// max(delta_low, eta) until a push-up point passes the certificate.
InitialBounds init_bounds(const ParametricProblem& problem, const DemandVector& d_tilde,
                          const PrivacyParams& params);

/// Bisection on delta between the bounds. Returns the last certified push-up
/// point; oracle calls already spent by init are charged against the cap.
BilevelResult blm_search(const ParametricProblem& problem, const DemandVector& d_tilde,
                         const InitialBounds& init, const PrivacyParams& params);

/// fast_path, then init_bounds, then blm_search.
BilevelResult solve_bilevel(const ParametricProblem& problem, const DemandVector& d_tilde,
                            const PrivacyParams& params);

struct ObfuscationMetrics {
  std::optional<double> theorem2_ratio;
  // ||x - d_orig||_2 / ||d_orig||_2 and the plain norms.
  double dist_laplace = 0.0;
  double dist_hpr = 0.0;
  double dist_bl = 0.0;
  double abs_dist_laplace = 0.0;
  double abs_dist_hpr = 0.0;
  double abs_dist_bl = 0.0;
  // (O(x) - f) / f; NaN when O(x) has no value.
  double cost_err_bl = 0.0;
  double cost_err_hpr = 0.0;
  int oracle_calls = 0;
  double wall_ms = 0.0;
};

struct ObfuscationRun {
  DemandVector d_tilde;
  BilevelResult result;
  ObfuscationMetrics metrics;
};

struct ObfuscationOptions {
  /// Skip the noise draw and use d_orig as d_tilde.
  bool zero_noise = false;
};

/// End-to-end release: Laplace noise, then the bilevel post-processing.
/// Throws std::invalid_argument when the follower has no solution at d_orig.
ObfuscationRun run_obfuscation(const ParametricProblem& problem, const DemandVector& d_orig,
                               const PrivacyParams& params, ObfuscationOptions options = {});

}  // namespace dpbl
