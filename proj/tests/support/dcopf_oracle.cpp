#include "dcopf_oracle.hpp"

#include <cmath>
#include <functional>

namespace dpbl::testing {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void for_each_subset(int m, int k, const std::function<void(const std::vector<int>&)>& visit) {
  if (k < 0 || k > m) return;
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    visit(idx);
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == m - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) {
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
}

}  // namespace

BruteForceFollower::BruteForceFollower(const Network& net) {
  const int ng = static_cast<int>(net.generators.size());
  const int nb = static_cast<int>(net.buses.size());
  const std::vector<int> demand_buses = net.demand_buses();
  const int nd = static_cast<int>(demand_buses.size());

  // Angle column of each bus; the slack angle is eliminated (fixed at 0).
  std::vector<int> angle_col(static_cast<std::size_t>(nb), -1);
  int next = ng;
  for (int b = 0; b < nb; ++b) {
    if (b != net.slack_bus) angle_col[static_cast<std::size_t>(b)] = next++;
  }
  const int nv = next;

  // Flow of a line as a row over x.
  auto flow_row = [&](const Line& l) {
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(nv);
    if (angle_col[static_cast<std::size_t>(l.from)] >= 0) {
      r[angle_col[static_cast<std::size_t>(l.from)]] += l.susceptance;
    }
    if (angle_col[static_cast<std::size_t>(l.to)] >= 0) {
      r[angle_col[static_cast<std::size_t>(l.to)]] -= l.susceptance;
    }
    return r;
  };

  // Injection balance: sum p at bus - sum outgoing flows = demand at bus.
  MatrixXd E = MatrixXd::Zero(nb, nv);
  MatrixXd D = MatrixXd::Zero(nb, nd);
  for (int g = 0; g < ng; ++g) E(net.generators[static_cast<std::size_t>(g)].bus, g) += 1.0;
  for (const Line& l : net.lines) {
    const Eigen::RowVectorXd f = flow_row(l);
    E.row(l.from) -= f;
    E.row(l.to) += f;
  }
  for (int k = 0; k < nd; ++k) D(demand_buses[static_cast<std::size_t>(k)], k) = 1.0;

  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  for (const Line& l : net.lines) {
    if (!std::isfinite(l.flow_limit)) continue;
    rows.push_back(flow_row(l));
    rhs.push_back(l.flow_limit);
    rows.push_back(-flow_row(l));
    rhs.push_back(l.flow_limit);
  }
  for (int g = 0; g < ng; ++g) {
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(nv);
    r[g] = 1.0;
    rows.push_back(r);
    rhs.push_back(net.generators[static_cast<std::size_t>(g)].p_max);
    rows.push_back(-r);
    rhs.push_back(-net.generators[static_cast<std::size_t>(g)].p_min);
  }
  G_.resize(static_cast<Eigen::Index>(rows.size()), nv);
  h_.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    G_.row(static_cast<Eigen::Index>(i)) = rows[i];
    h_[static_cast<Eigen::Index>(i)] = rhs[i];
  }
  cost_ = VectorXd::Zero(nv);
  for (int g = 0; g < ng; ++g) {
    cost_[g] = net.generators[static_cast<std::size_t>(g)].cost_c1;
    fixed_cost_ += net.generators[static_cast<std::size_t>(g)].cost_c0;
  }

  // With the slack angle eliminated the nb balance rows are independent, so a
  // vertex needs nv - nb active inequalities.
  const int me = nb;
  for_each_subset(static_cast<int>(G_.rows()), nv - me, [&](const std::vector<int>& act) {
    MatrixXd M(nv, nv);
    M.topRows(me) = E;
    MatrixXd R = MatrixXd::Zero(nv, nd);
    VectorXd r0 = VectorXd::Zero(nv);
    R.topRows(me) = D;
    for (std::size_t k = 0; k < act.size(); ++k) {
      M.row(me + static_cast<int>(k)) = G_.row(act[k]);
      r0[me + static_cast<int>(k)] = h_[act[k]];
    }
    Eigen::FullPivLU<MatrixXd> lu(M);
    if (lu.rank() < nv) return;
    bases_.push_back(Basis{lu.solve(R), lu.solve(r0)});
  });
}

std::optional<double> BruteForceFollower::extreme(std::span<const double> d,
                                                  double sign) const {
  const Eigen::Map<const VectorXd> dv(d.data(), static_cast<Eigen::Index>(d.size()));
  std::optional<double> best;
  for (const Basis& b : bases_) {
    const VectorXd x = b.offset + b.slope * dv;
    if (G_.rows() > 0 && (G_ * x - h_).maxCoeff() > 1e-10) continue;
    const double cost = cost_.dot(x) + fixed_cost_;
    if (!best || sign * cost < sign * *best) best = cost;
  }
  return best;
}

std::optional<double> BruteForceFollower::value(std::span<const double> d) const {
  return extreme(d, 1.0);
}

std::optional<double> BruteForceFollower::max_cost(std::span<const double> d) const {
  return extreme(d, -1.0);
}

bool bl_feasible(const BruteForceFollower& follower, std::span<const double> d,
                 double f_tilde, double beta, double tol) {
  const auto v = follower.value(d);
  return v && *v >= f_tilde - beta - tol && *v <= f_tilde + beta + tol;
}

std::optional<GridOptimum> grid_search_1d(const BruteForceFollower& follower,
                                          double d_tilde, double f_tilde, double beta,
                                          double radius, double step) {
  std::optional<GridOptimum> best;
  const long kmax = static_cast<long>(std::ceil(radius / step));
  std::size_t count = 0;
  for (long k = -kmax; k <= kmax; ++k) {
    const double d = d_tilde + static_cast<double>(k) * step;
    const double dist = (d - d_tilde) * (d - d_tilde);
    if (best && dist >= best->delta) continue;
    ++count;
    if (!bl_feasible(follower, std::span<const double>(&d, 1), f_tilde, beta)) continue;
    best = GridOptimum{dist, {d}, 0};
  }
  if (best) best->points_evaluated = count;
  return best;
}

std::optional<GridOptimum> grid_search_2d(const BruteForceFollower& follower,
                                          std::span<const double> d_tilde, double f_tilde,
                                          double beta, double radius, double step) {
  std::optional<GridOptimum> best;
  const long kmax = static_cast<long>(std::ceil(radius / step));
  const double r2 = radius * radius;
  std::size_t count = 0;
  for (long i = -kmax; i <= kmax; ++i) {
    const double di = static_cast<double>(i) * step;
    for (long j = -kmax; j <= kmax; ++j) {
      const double dj = static_cast<double>(j) * step;
      const double dist = di * di + dj * dj;
      if (dist > r2) continue;
      if (best && dist >= best->delta) continue;
      ++count;
      const double d[2] = {d_tilde[0] + di, d_tilde[1] + dj};
      if (!bl_feasible(follower, d, f_tilde, beta)) continue;
      best = GridOptimum{dist, {d[0], d[1]}, 0};
    }
  }
  if (best) best->points_evaluated = count;
  return best;
}

std::optional<GridOptimum> grid_optimum(const BruteForceFollower& follower,
                                        std::span<const double> d_tilde,
                                        std::span<const double> d_orig, double f_tilde,
                                        double beta, double step) {
  double r2 = 0.0;
  for (std::size_t i = 0; i < d_tilde.size(); ++i) {
    r2 += (d_orig[i] - d_tilde[i]) * (d_orig[i] - d_tilde[i]);
  }
  const double radius = std::sqrt(r2) + 2.0 * step;
  if (d_tilde.size() == 1) {
    return grid_search_1d(follower, d_tilde[0], f_tilde, beta, radius, step);
  }
  if (d_tilde.size() == 2) return grid_search_2d(follower, d_tilde, f_tilde, beta, radius, step);
  return std::nullopt;
}

}  // namespace dpbl::testing
