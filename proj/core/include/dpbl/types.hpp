#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpbl {

/// Thrown when two vectors that must agree in length do not.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class DemandRole { Original, Noisy, Released, HprPoint, PushUpPoint };

const char* to_string(DemandRole role);

/// A vector of per-unit demands tagged with the stage of the release
/// pipeline that produced it. Entries are always finite.
class DemandVector {
 public:
  DemandVector() = default;
  explicit DemandVector(std::vector<double> values,
                        DemandRole role = DemandRole::Original);

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  DemandRole role() const { return role_; }

  /// Same values, different pipeline tag.
  DemandVector with_role(DemandRole role) const;

  friend bool operator==(const DemandVector& a, const DemandVector& b) {
    return a.values_ == b.values_;
  }

 private:
  std::vector<double> values_;
  DemandRole role_ = DemandRole::Original;
};

/// Privacy and fidelity knobs of one release.
struct PrivacyParams {
  double epsilon = 1.0;
  double alpha = 0.1;
  /// Absolute half-width of the admissible cost band.
  double beta = 0.01;
  /// Assumed bound on |O(d_orig) - f_tilde|; beta must dominate it.
  std::optional<double> beta_floor;
  double eta = 1e-3;
  int max_oracle_calls = 3000;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

enum class CostSource { Public, PrivateEstimate };

struct CostTarget {
  double f_tilde = 0.0;
  CostSource source = CostSource::Public;
};

enum class FollowerStatus { Optimal, Infeasible, NumericFailure };

const char* to_string(FollowerStatus status);

/// Outcome of one solve of the follower problem O(d).
struct FollowerResult {
  FollowerStatus status = FollowerStatus::NumericFailure;
  /// Meaningful only when status is Optimal.
  double objective = 0.0;
  std::vector<double> dispatch;

  bool optimal() const { return status == FollowerStatus::Optimal; }
};

/// Squared-distance interval bracketing the bilevel optimum.
struct DistanceBudget {
  double delta_low = 0.0;
  double delta_high = 0.0;
};

double l2sq_distance(const DemandVector& a, const DemandVector& b);

/// ||d_star - d_orig|| / ||d_tilde - d_orig|| in plain L2. Returns nullopt
/// when d_tilde == d_orig (noiseless input, ratio not applicable).
std::optional<double> theorem2_ratio(const DemandVector& d_star,
                                     const DemandVector& d_tilde,
                                     const DemandVector& d_orig);

/// Sum of demands; the monotone proxy maximized by the push-up program.
double proxy_m(const DemandVector& d);

enum class SubproblemStatus { Optimal, Infeasible, NumericFailure };

/// A demand/dispatch pair returned by the relaxation or push-up programs.
struct LeaderPoint {
  SubproblemStatus status = SubproblemStatus::NumericFailure;
  DemandVector demand;
  std::vector<double> dispatch;
  /// Generation cost f(x) of the returned dispatch (not the follower optimum).
  double dispatch_cost = 0.0;

  bool optimal() const { return status == SubproblemStatus::Optimal; }
};

/// The parametric follower O(d) together with the two auxiliary programs
/// the release engine needs. Implementations must be safe to call
/// concurrently from distinct threads when const.
class ParametricProblem {
 public:
  virtual ~ParametricProblem() = default;

  virtual std::size_t demand_size() const = 0;
  virtual const CostTarget& target() const = 0;
  virtual double beta() const = 0;

  /// O(d): minimum cost over feasible dispatches for demand d.
  virtual FollowerResult follower(const DemandVector& d) const = 0;

  /// High point relaxation: closest d to d_tilde that admits some dispatch
  /// whose cost lies in the band.
  virtual LeaderPoint high_point(const DemandVector& d_tilde) const = 0;

  /// Push-up program: maximize proxy_m(d) subject to a band-feasible
  /// dispatch and ||d - d_tilde||^2 <= delta.
  virtual LeaderPoint push_up(const DemandVector& d_tilde,
                              double delta) const = 0;

  virtual double proxy(const DemandVector& d) const { return proxy_m(d); }

  bool in_band(double cost, double tol = 0.0) const {
    return cost >= target().f_tilde - beta() - tol &&
           cost <= target().f_tilde + beta() + tol;
  }
};

}  // namespace dpbl
