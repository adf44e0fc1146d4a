#include "dpbl/bilevel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dpbl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Doubling gives up beyond this radius.
constexpr double kMaxDelta = 1e12;
// Ball counts as inactive below this fraction of the probed radius.
constexpr double kInactiveBall = 1.0 - 1e-6;

double lower_edge(const ParametricProblem& p) { return p.target().f_tilde - p.beta(); }

double l2_norm(const DemandVector& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

// One push-up probe and the follower solve at its demand.
struct Probe {
  LeaderPoint point;
  FollowerResult follower;
  double delta_up = kNaN;

  bool certified(const ParametricProblem& p) const {
    return follower.optimal() && follower.objective >= lower_edge(p) - kCertificateTol;
  }
};

Probe probe(const ParametricProblem& problem, const DemandVector& d_tilde, double delta) {
  Probe out;
  out.point = problem.push_up(d_tilde, delta);
  if (!out.point.optimal()) return out;
  out.delta_up = l2sq_distance(out.point.demand, d_tilde);
  out.follower = problem.follower(out.point.demand);
  return out;
}

// Probe at delta == delta_low. The ball then meets the relaxed feasible set
// only at the relaxation point, so the push-up program has no interior and
// its solution is that point.
Probe probe_at_relaxation(const ParametricProblem& problem, const DemandVector& d_tilde,
                          const LeaderPoint& hpr) {
  Probe out;
  out.point = hpr;
  out.point.demand = hpr.demand.with_role(DemandRole::PushUpPoint);
  out.delta_up = l2sq_distance(out.point.demand, d_tilde);
  out.follower = problem.follower(out.point.demand);
  return out;
}

IterationRecord record(const ParametricProblem& problem, int iter, double mid, const Probe& pr,
                       Branch branch, const DistanceBudget& after) {
  IterationRecord r;
  r.iter = iter;
  r.delta_low = after.delta_low;
  r.delta_high = after.delta_high;
  r.delta_mid = mid;
  r.branch = branch;
  if (pr.point.optimal()) {
    r.delta_up = pr.delta_up;
    r.pushup_objective = problem.proxy(pr.point.demand);
    r.follower_cost = pr.follower.optimal() ? pr.follower.objective : kNaN;
    r.d_up.assign(pr.point.demand.values().begin(), pr.point.demand.values().end());
  } else {
    r.delta_up = kNaN;
    r.pushup_objective = kNaN;
    r.follower_cost = kNaN;
  }
  return r;
}

bool numeric_failure(const Probe& pr) {
  return pr.point.status == SubproblemStatus::NumericFailure ||
         (pr.point.optimal() && !pr.follower.optimal());
}

}  // namespace

const char* to_string(BilevelStatus status) {
  switch (status) {
    case BilevelStatus::Converged: return "Converged";
    case BilevelStatus::FastPath: return "FastPath";
    case BilevelStatus::OracleCapHit: return "OracleCapHit";
    case BilevelStatus::Infeasible: return "Infeasible";
    case BilevelStatus::SolverFailure: return "SolverFailure";
  }
  return "?";
}

const char* to_string(Branch branch) {
  switch (branch) {
    case Branch::UpperUpdated: return "UpperUpdated";
    case Branch::LowerUpdated: return "LowerUpdated";
    case Branch::PushUpInfeasible: return "PushUpInfeasible";
  }
  return "?";
}

std::optional<BilevelResult> fast_path(const ParametricProblem& problem,
                                       const DemandVector& d_tilde) {
  const FollowerResult o = problem.follower(d_tilde);
  if (o.status == FollowerStatus::NumericFailure) {
    BilevelResult r;
    r.status = BilevelStatus::SolverFailure;
    r.d_star = d_tilde;
    r.message = "follower solve failed at d_tilde";
    return r;
  }
  if (!o.optimal() || !problem.in_band(o.objective, kCertificateTol)) return std::nullopt;
  BilevelResult r;
  r.status = BilevelStatus::FastPath;
  r.d_star = d_tilde.with_role(DemandRole::Released);
  r.delta_star = 0.0;
  r.cost = o.objective;
  return r;
}

InitialBounds init_bounds(const ParametricProblem& problem, const DemandVector& d_tilde,
                          const PrivacyParams& params) {
  InitialBounds out;
  out.hpr = problem.high_point(d_tilde);
  if (out.hpr.status == SubproblemStatus::Infeasible) {
    out.status = BilevelStatus::Infeasible;
    out.message = "high point relaxation infeasible: cost band unreachable";
    return out;
  }
  if (!out.hpr.optimal()) {
    out.status = BilevelStatus::SolverFailure;
    out.message = "high point relaxation failed";
    return out;
  }
  out.bounds.delta_low = l2sq_distance(out.hpr.demand, d_tilde);

  double delta = std::max(out.bounds.delta_low, params.eta);
  for (int iter = 0;; ++iter) {
    if (out.oracle_calls >= params.max_oracle_calls) {
      out.status = BilevelStatus::OracleCapHit;
      out.message = "oracle cap reached while doubling";
      return out;
    }
    const Probe pr = delta == out.bounds.delta_low
                         ? probe_at_relaxation(problem, d_tilde, out.hpr)
                         : probe(problem, d_tilde, delta);
    ++out.oracle_calls;
    if (numeric_failure(pr)) {
      out.status = BilevelStatus::SolverFailure;
      out.message = fmt::format("push-up or follower failed at delta={}", delta);
      return out;
    }
    if (pr.certified(problem)) {
      out.bounds.delta_high = delta;
      out.certified = pr.point;
      out.certified_cost = pr.follower.objective;
      out.probes.push_back(record(problem, iter, delta, pr, Branch::UpperUpdated, out.bounds));
      return out;
    }
    const Branch branch = pr.point.optimal() ? Branch::LowerUpdated : Branch::PushUpInfeasible;
    DistanceBudget now = out.bounds;
    now.delta_high = delta;
    out.probes.push_back(record(problem, iter, delta, pr, branch, now));
    if (pr.point.optimal() && pr.delta_up < delta * kInactiveBall) {
      out.status = BilevelStatus::Infeasible;
      out.message = "push-up saturated below the cost band";
      return out;
    }
    delta *= 2.0;
    if (delta > kMaxDelta) {
      out.status = BilevelStatus::Infeasible;
      out.message = "doubling exceeded the radius limit";
      return out;
    }
  }
}

BilevelResult blm_search(const ParametricProblem& problem, const DemandVector& d_tilde,
                         const InitialBounds& init, const PrivacyParams& params) {
  BilevelResult r;
  r.probes = init.probes;
  r.oracle_calls = init.oracle_calls;
  if (init.hpr.optimal()) {
    r.hpr_point = init.hpr.demand;
    r.hpr_distance_sq = l2sq_distance(init.hpr.demand, d_tilde);
  }

  auto finish_with = [&](const LeaderPoint& pt, double cost, BilevelStatus status) {
    r.d_star = pt.demand.with_role(DemandRole::Released);
    r.delta_star = l2sq_distance(r.d_star, d_tilde);
    r.cost = cost;
    r.status = status;
  };

  // Best available point when the search stops early without a certificate.
  auto fallback = [&](BilevelStatus status, std::string message) {
    r.message = std::move(message);
    r.status = status;
    if (init.certified) {
      finish_with(*init.certified, init.certified_cost, status);
    } else if (init.hpr.optimal()) {
      const FollowerResult o = problem.follower(init.hpr.demand);
      finish_with(init.hpr, o.optimal() ? o.objective : kNaN, status);
    } else {
      r.d_star = d_tilde;
      r.cost = kNaN;
    }
    return r;
  };

  if (init.status != BilevelStatus::Converged) return fallback(init.status, init.message);
  if (!init.certified) throw std::invalid_argument("blm_search: bounds carry no certified point");

  DistanceBudget b = init.bounds;
  LeaderPoint best = *init.certified;
  double best_cost = init.certified_cost;
  for (int iter = 0; b.delta_high - b.delta_low > params.eta; ++iter) {
    if (r.oracle_calls >= params.max_oracle_calls) {
      finish_with(best, best_cost, BilevelStatus::OracleCapHit);
      r.message = "oracle cap reached during bisection";
      return r;
    }
    const double mid = 0.5 * (b.delta_low + b.delta_high);
    const Probe pr = probe(problem, d_tilde, mid);
    ++r.oracle_calls;
    if (numeric_failure(pr)) {
      finish_with(best, best_cost, BilevelStatus::SolverFailure);
      r.message = fmt::format("push-up or follower failed at delta={}", mid);
      return r;
    }
    Branch branch;
    if (!pr.point.optimal()) {
      b.delta_low = mid;
      branch = Branch::PushUpInfeasible;
    } else if (pr.certified(problem)) {
      b.delta_high = std::clamp(pr.delta_up, b.delta_low, mid);
      best = pr.point;
      best_cost = pr.follower.objective;
      branch = Branch::UpperUpdated;
    } else {
      b.delta_low = mid;
      branch = Branch::LowerUpdated;
    }
    r.trace.push_back(record(problem, iter, mid, pr, branch, b));
  }
  finish_with(best, best_cost, BilevelStatus::Converged);
  return r;
}

BilevelResult solve_bilevel(const ParametricProblem& problem, const DemandVector& d_tilde,
                            const PrivacyParams& params) {
  if (auto fast = fast_path(problem, d_tilde)) return *fast;
  return blm_search(problem, d_tilde, init_bounds(problem, d_tilde, params), params);
}

ObfuscationRun run_obfuscation(const ParametricProblem& problem, const DemandVector& d_orig,
                               const PrivacyParams& params, ObfuscationOptions options) {
  params.validate();
  if (!problem.follower(d_orig).optimal()) {
    throw std::invalid_argument("run_obfuscation: follower has no solution at d_orig");
  }
  const auto start = std::chrono::steady_clock::now();
  DemandVector d_tilde = d_orig.with_role(DemandRole::Noisy);
  if (!options.zero_noise) {
    LaplaceNoise noise = LaplaceNoise::for_params(params);
    d_tilde = obfuscate_demands(d_orig, params, noise);
  }
  BilevelResult result = solve_bilevel(problem, d_tilde, params);
  const auto stop = std::chrono::steady_clock::now();

  // The fast path skips the relaxation; it is still needed for the metrics.
  if (!result.hpr_point) {
    const LeaderPoint h = problem.high_point(d_tilde);
    if (h.optimal()) {
      result.hpr_point = h.demand;
      result.hpr_distance_sq = l2sq_distance(h.demand, d_tilde);
    }
  }

  ObfuscationMetrics m;
  const double f = problem.target().f_tilde;
  const double scale = l2_norm(d_orig);
  auto dist = [&](const DemandVector& x) { return std::sqrt(l2sq_distance(x, d_orig)); };
  auto rel = [&](double v) { return scale > 0 ? v / scale : v; };
  auto cost_err = [&](double o) { return f != 0.0 ? (o - f) / f : o - f; };

  m.abs_dist_laplace = dist(d_tilde);
  m.dist_laplace = rel(m.abs_dist_laplace);
  m.abs_dist_bl = dist(result.d_star);
  m.dist_bl = rel(m.abs_dist_bl);
  m.cost_err_bl = cost_err(result.cost);
  if (result.hpr_point) {
    m.abs_dist_hpr = dist(*result.hpr_point);
    m.dist_hpr = rel(m.abs_dist_hpr);
    const FollowerResult oh = problem.follower(*result.hpr_point);
    m.cost_err_hpr = oh.optimal() ? cost_err(oh.objective) : kNaN;
  } else {
    m.abs_dist_hpr = m.dist_hpr = m.cost_err_hpr = kNaN;
  }
  if (result.released()) m.theorem2_ratio = theorem2_ratio(result.d_star, d_tilde, d_orig);
  m.oracle_calls = result.oracle_calls;
  m.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  return ObfuscationRun{std::move(d_tilde), std::move(result), m};
}

}  // namespace dpbl
