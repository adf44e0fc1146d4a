#include "dpbl/types.hpp"

#include <cmath>
#include <numeric>

namespace dpbl {

const char* to_string(DemandRole role) {
  switch (role) {
    case DemandRole::Original: return "original";
    case DemandRole::Noisy: return "noisy";
    case DemandRole::Released: return "released";
    case DemandRole::HprPoint: return "hpr";
    case DemandRole::PushUpPoint: return "pushup";
  }
  return "unknown";
}

const char* to_string(FollowerStatus status) {
  switch (status) {
    case FollowerStatus::Optimal: return "optimal";
    case FollowerStatus::Infeasible: return "infeasible";
    case FollowerStatus::NumericFailure: return "numeric_failure";
  }
  return "unknown";
}

DemandVector::DemandVector(std::vector<double> values, DemandRole role)
    : values_(std::move(values)), role_(role) {
  for (double v : values_) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("DemandVector: non-finite entry");
    }
  }
}

DemandVector DemandVector::with_role(DemandRole role) const {
  DemandVector out = *this;
  out.role_ = role;
  return out;
}

void PrivacyParams::validate() const {
  if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be > 0");
  if (!(alpha > 0)) throw std::invalid_argument("alpha must be > 0");
  if (!(beta > 0)) throw std::invalid_argument("beta must be > 0");
  if (!(eta > 0)) throw std::invalid_argument("eta must be > 0");
  if (max_oracle_calls < 1) {
    throw std::invalid_argument("max_oracle_calls must be >= 1");
  }
  if (beta_floor) {
    if (!(*beta_floor > 0)) throw std::invalid_argument("beta_floor must be > 0");
    if (beta < *beta_floor) {
      throw std::invalid_argument("beta must be >= beta_floor");
    }
  }
}

double l2sq_distance(const DemandVector& a, const DemandVector& b) {
  if (a.size() != b.size()) {
    throw DimensionError("l2sq_distance: length mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    sum += diff * diff;
  }
  return sum;
}

std::optional<double> theorem2_ratio(const DemandVector& d_star,
                                     const DemandVector& d_tilde,
                                     const DemandVector& d_orig) {
  const double denom = l2sq_distance(d_tilde, d_orig);
  const double num = l2sq_distance(d_star, d_orig);
  if (denom == 0.0) return std::nullopt;
  return std::sqrt(num) / std::sqrt(denom);
}

double proxy_m(const DemandVector& d) {
  const auto v = d.values();
  return std::accumulate(v.begin(), v.end(), 0.0);
}

}  // namespace dpbl
