#include "dpbl/solver.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dpbl {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Minimum centering when the curved ball row is present; Mehrotra's
// heuristic otherwise collapses sigma after the first affine step.
constexpr double kBallSigmaFloor = 0.1;
// Wide-neighborhood bound s_i z_i >= kCentrality * mu kept on ball programs.
constexpr double kCentrality = 1e-3;

// Ball row in the form ||x_S - z||^2 - r^2 + lin_coef * x[lin_index] <= 0.
// The linear tail only appears in the phase-1 program.
struct StdBall {
  std::vector<int> idx;
  VectorXd center;
  double radius_sq = 0.0;
  int lin_index = -1;
  double lin_coef = 0.0;
};

// Minimization form with all inequalities stacked as G x <= h.
struct Standard {
  MatrixXd Q;
  VectorXd c;
  MatrixXd A;
  VectorXd b;
  MatrixXd G;
  VectorXd h;
  std::optional<StdBall> ball;
  VectorXd start;

  // Row bookkeeping for mapping duals back: G = [Ain(kept); ub rows; lb rows].
  std::vector<int> in_rows;
  std::vector<int> ub_vars;
  std::vector<int> lb_vars;

  int n() const { return static_cast<int>(c.size()); }
  int m() const { return static_cast<int>(G.rows()) + (ball ? 1 : 0); }
};

enum class CoreStatus { Converged, IterLimit, Diverged, Stalled, FactorFailure };

struct CoreResult {
  CoreStatus status = CoreStatus::FactorFailure;
  VectorXd x, y, z, s;
  int iterations = 0;
  double pres = kInf;
  double dres = kInf;
  double gap = kInf;
  double objective = 0.0;
};

double inf_norm(const VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
}

VectorXd initial_point(const VectorXd& lb, const VectorXd& ub) {
  VectorXd x = VectorXd::Zero(lb.size());
  for (int j = 0; j < x.size(); ++j) {
    const bool has_lb = std::isfinite(lb[j]);
    const bool has_ub = std::isfinite(ub[j]);
    if (has_lb && has_ub) {
      x[j] = 0.5 * (lb[j] + ub[j]);
    } else if (has_lb) {
      x[j] = std::max(lb[j] + 1.0, 0.0);
    } else if (has_ub) {
      x[j] = std::min(ub[j] - 1.0, 0.0);
    }
  }
  return x;
}

Standard to_standard(const ConvexProgram& p) {
  Standard sf;
  const int n = p.num_vars();
  const double sign = p.sense == Sense::Maximize ? -1.0 : 1.0;
  sf.Q = sign * p.Q;
  sf.c = sign * p.c;
  sf.A = p.Aeq;
  sf.b = p.beq;

  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  for (int i = 0; i < p.Ain.rows(); ++i) {
    if (p.bin[i] == kInf) continue;
    rows.push_back(p.Ain.row(i));
    rhs.push_back(p.bin[i]);
    sf.in_rows.push_back(i);
  }
  for (int j = 0; j < n; ++j) {
    if (!std::isfinite(p.ub[j])) continue;
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
    r[j] = 1.0;
    rows.push_back(r);
    rhs.push_back(p.ub[j]);
    sf.ub_vars.push_back(j);
  }
  for (int j = 0; j < n; ++j) {
    if (!std::isfinite(p.lb[j])) continue;
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
    r[j] = -1.0;
    rows.push_back(r);
    rhs.push_back(-p.lb[j]);
    sf.lb_vars.push_back(j);
  }
  sf.G.resize(static_cast<Eigen::Index>(rows.size()), n);
  sf.h.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    sf.G.row(static_cast<Eigen::Index>(i)) = rows[i];
    sf.h[static_cast<Eigen::Index>(i)] = rhs[i];
  }
  if (p.ball) {
    StdBall ball;
    ball.idx = p.ball->indices;
    ball.center = p.ball->center;
    ball.radius_sq = p.ball->radius_sq;
    sf.ball = std::move(ball);
  }
  sf.start = initial_point(p.lb, p.ub);
  if (sf.ball) {
    for (std::size_t k = 0; k < sf.ball->idx.size(); ++k) {
      sf.start[sf.ball->idx[k]] = sf.ball->center[static_cast<Eigen::Index>(k)];
    }
  }
  return sf;
}

// min t  s.t.  every inequality relaxed by t, every equality |a'x - b| <= t,
// t >= 0. The program is always feasible and bounded below by zero.
Standard to_phase1(const Standard& sf) {
  const int n = sf.n();
  const int me = static_cast<int>(sf.A.rows());
  const int ml = static_cast<int>(sf.G.rows());
  Standard ph;
  ph.Q = MatrixXd::Zero(n + 1, n + 1);
  ph.c = VectorXd::Zero(n + 1);
  ph.c[n] = 1.0;
  ph.A.resize(0, n + 1);
  ph.b.resize(0);
  const int rows = ml + 2 * me + 1;
  ph.G = MatrixXd::Zero(rows, n + 1);
  ph.h = VectorXd::Zero(rows);
  ph.G.topLeftCorner(ml, n) = sf.G;
  ph.h.head(ml) = sf.h;
  ph.G.block(ml, 0, me, n) = sf.A;
  ph.h.segment(ml, me) = sf.b;
  ph.G.block(ml + me, 0, me, n) = -sf.A;
  ph.h.segment(ml + me, me) = -sf.b;
  ph.G.col(n).setConstant(-1.0);
  if (sf.ball) {
    ph.ball = sf.ball;
    ph.ball->lin_index = n;
    ph.ball->lin_coef = -1.0;
  }
  ph.start = VectorXd::Zero(n + 1);
  ph.start.head(n) = sf.start;
  VectorXd viol = sf.G * sf.start - sf.h;
  double t0 = std::max(inf_norm(sf.A * sf.start - sf.b),
                       viol.size() ? viol.maxCoeff() : 0.0);
  ph.start[n] = std::max(t0, 0.0) + 1.0;
  return ph;
}

void eval_constraints(const Standard& sf, const VectorXd& x, VectorXd& g,
                      MatrixXd& J) {
  const int ml = static_cast<int>(sf.G.rows());
  g.resize(sf.m());
  J.resize(sf.m(), sf.n());
  g.head(ml) = sf.G * x - sf.h;
  J.topRows(ml) = sf.G;
  if (sf.ball) {
    const StdBall& ball = *sf.ball;
    double val = -ball.radius_sq;
    J.row(ml).setZero();
    for (std::size_t k = 0; k < ball.idx.size(); ++k) {
      const double diff = x[ball.idx[k]] - ball.center[static_cast<Eigen::Index>(k)];
      val += diff * diff;
      J(ml, ball.idx[k]) = 2.0 * diff;
    }
    if (ball.lin_index >= 0) {
      val += ball.lin_coef * x[ball.lin_index];
      J(ml, ball.lin_index) += ball.lin_coef;
    }
    g[ml] = val;
  }
}

double max_step(const VectorXd& v, const VectorXd& dv) {
  double step = kInf;
  for (int i = 0; i < v.size(); ++i) {
    if (dv[i] < 0) step = std::min(step, -v[i] / dv[i]);
  }
  return step;
}

// Euclidean norm of the perturbed KKT residual at a trial point.
double kkt_merit(const Standard& sf, const VectorXd& x, const VectorXd& y,
                 const VectorXd& s, const VectorXd& z, double target) {
  VectorXd g;
  MatrixXd J;
  eval_constraints(sf, x, g, J);
  const VectorXd rd = sf.Q * x + sf.c + J.transpose() * z + sf.A.transpose() * y;
  const VectorXd re = sf.A * x - sf.b;
  const VectorXd ri = g + s;
  const VectorXd rc = (s.array() * z.array() - target).matrix();
  return std::sqrt(rd.squaredNorm() + re.squaredNorm() + ri.squaredNorm() +
                   rc.squaredNorm());
}

// Regularized augmented system [[K + rI, A'], [A, -rI]] with iterative
// refinement against the unregularized operator.
class KktSystem {
 public:
  KktSystem(const MatrixXd& K, const MatrixXd& A, double reg)
      : n_(static_cast<int>(K.rows())), me_(static_cast<int>(A.rows())) {
    exact_.resize(n_ + me_, n_ + me_);
    exact_.setZero();
    exact_.topLeftCorner(n_, n_) = K;
    exact_.topRightCorner(n_, me_) = A.transpose();
    exact_.bottomLeftCorner(me_, n_) = A;
    MatrixXd reg_mat = exact_;
    reg_mat.diagonal().head(n_).array() += reg;
    reg_mat.diagonal().tail(me_).array() -= reg;
    lu_.compute(reg_mat);
    full_ = !lu_.solve(VectorXd::Ones(n_ + me_)).allFinite();
    if (full_) full_lu_.compute(reg_mat);
  }

  // Refinement stops as soon as it fails to reduce the residual; on badly
  // conditioned systems it can otherwise diverge.
  bool solve(const VectorXd& rhs, VectorXd& sol) const {
    sol = factor_solve(rhs);
    if (!sol.allFinite()) return false;
    double res_norm = (rhs - exact_ * sol).norm();
    for (int k = 0; k < 3 && res_norm > 0.0; ++k) {
      const VectorXd trial = sol + factor_solve(rhs - exact_ * sol);
      if (!trial.allFinite()) break;
      const double trial_norm = (rhs - exact_ * trial).norm();
      if (!(trial_norm < res_norm)) break;
      sol = trial;
      res_norm = trial_norm;
    }
    return true;
  }

 private:
  // Partial pivoting can meet an exact zero pivot on nearly singular
  // systems; full pivoting is the fallback.
  VectorXd factor_solve(const VectorXd& rhs) const {
    return full_ ? VectorXd(full_lu_.solve(rhs)) : VectorXd(lu_.solve(rhs));
  }

  int n_;
  int me_;
  MatrixXd exact_;
  Eigen::PartialPivLU<MatrixXd> lu_;
  Eigen::FullPivLU<MatrixXd> full_lu_;
  bool full_ = false;
};

CoreResult run_ipm(const Standard& sf, const SolverOptions& opt) {
  const int n = sf.n();
  const int m = sf.m();
  const int me = static_cast<int>(sf.A.rows());
  const int ml = static_cast<int>(sf.G.rows());
  const double b_scale = 1.0 + std::max(inf_norm(sf.b), inf_norm(sf.h));
  const double c_scale = 1.0 + inf_norm(sf.c);

  CoreResult res;
  VectorXd x = sf.start;
  VectorXd y = VectorXd::Zero(me);
  VectorXd g;
  MatrixXd J;
  eval_constraints(sf, x, g, J);
  VectorXd s(m);
  VectorXd z = VectorXd::Ones(m);
  for (int i = 0; i < m; ++i) s[i] = std::max(-g[i], 1.0);

  double best_pres = kInf;
  int since_progress = 0;

  for (int iter = 0;; ++iter) {
    eval_constraints(sf, x, g, J);
    if (sf.ball) s[ml] = -g[ml];
    const VectorXd Qx = sf.Q * x;
    const VectorXd rd = Qx + sf.c + J.transpose() * z + sf.A.transpose() * y;
    const VectorXd re = sf.A * x - sf.b;
    const VectorXd ri = g + s;
    const double gap = m > 0 ? s.dot(z) : 0.0;
    const double mu = m > 0 ? gap / m : 0.0;
    const double obj = 0.5 * x.dot(Qx) + sf.c.dot(x);

    res.x = x;
    res.y = y;
    res.z = z;
    res.s = s;
    res.iterations = iter;
    res.pres = std::max(inf_norm(re), inf_norm(ri)) / b_scale;
    res.dres = inf_norm(rd) / c_scale;
    res.gap = gap;
    res.objective = obj;

    if (res.pres <= opt.tolerance && res.dres <= opt.tolerance &&
        gap <= opt.tolerance * (1.0 + std::abs(obj))) {
      res.status = CoreStatus::Converged;
      return res;
    }
    if (iter >= opt.max_iterations) {
      res.status = CoreStatus::IterLimit;
      return res;
    }
    if (!x.allFinite() || inf_norm(x) > 1e9) {
      res.status = CoreStatus::Diverged;
      return res;
    }
    if (inf_norm(z) > 1e14 || inf_norm(y) > 1e14 || (m > 0 && mu < 1e-30)) {
      res.status = CoreStatus::Stalled;
      return res;
    }
    if (res.pres < 0.5 * best_pres) {
      best_pres = res.pres;
      since_progress = 0;
    } else if (res.pres > 1e3 * opt.tolerance && ++since_progress > 40) {
      res.status = CoreStatus::Stalled;
      return res;
    }

    MatrixXd H = sf.Q;
    if (sf.ball) {
      for (int idx : sf.ball->idx) H(idx, idx) += 2.0 * z[ml];
    }
    const VectorXd d = (z.array() / s.array()).matrix();
    const MatrixXd K = H + J.transpose() * d.asDiagonal() * J;

    std::optional<KktSystem> kkt(std::in_place, K, sf.A, opt.regularization);
    auto newton = [&](const VectorXd& rc, VectorXd& dx, VectorXd& dy,
                      VectorXd& ds, VectorXd& dz) -> bool {
      // dz = S^{-1}(Z ri - rc) + D J dx, ds = -ri - J dx
      const VectorXd w = ((z.array() * ri.array() - rc.array()) / s.array()).matrix();
      VectorXd rhs(n + me);
      rhs.head(n) = -rd - J.transpose() * w;
      rhs.tail(me) = -re;
      VectorXd sol;
      if (!kkt->solve(rhs, sol)) return false;
      dx = sol.head(n);
      dy = sol.tail(me);
      const VectorXd Jdx = J * dx;
      dz = w + (d.array() * Jdx.array()).matrix();
      ds = -ri - Jdx;
      return dx.allFinite() && dz.allFinite();
    };
    auto newton_retry = [&](const VectorXd& rc, VectorXd& dx, VectorXd& dy,
                            VectorXd& ds, VectorXd& dz) -> bool {
      if (newton(rc, dx, dy, ds, dz)) return true;
      kkt.emplace(K, sf.A, opt.retry_regularization);
      return newton(rc, dx, dy, ds, dz);
    };

    VectorXd dx, dy, ds, dz;
    if (m == 0) {
      if (!newton_retry(VectorXd(), dx, dy, ds, dz)) {
        res.status = CoreStatus::FactorFailure;
        return res;
      }
      x += dx;
      y += dy;
      continue;
    }

    // Predictor.
    const VectorXd rc_aff = (s.array() * z.array()).matrix();
    VectorXd dx_a, dy_a, ds_a, dz_a;
    if (!newton_retry(rc_aff, dx_a, dy_a, ds_a, dz_a)) {
      res.status = CoreStatus::FactorFailure;
      return res;
    }
    const double ap = std::min(1.0, max_step(s, ds_a));
    const double ad = std::min(1.0, max_step(z, dz_a));
    const double mu_aff = (s + ap * ds_a).dot(z + ad * dz_a) / m;
    double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);
    if (sf.ball) sigma = std::max(sigma, kBallSigmaFloor);

    // Corrector.
    const VectorXd rc = (s.array() * z.array() + ds_a.array() * dz_a.array() -
                         sigma * mu)
                            .matrix();
    if (!newton_retry(rc, dx, dy, ds, dz)) {
      res.status = CoreStatus::FactorFailure;
      return res;
    }

    const double tau = std::clamp(1.0 - mu, 0.995, 1.0 - 1e-8);
    const double step =
        std::min(1.0, tau * std::min(max_step(s, ds), max_step(z, dz)));
    double alpha = step;
    if (sf.ball) {
      // The ball slack is recomputed from x, so each trial point must stay
      // strictly inside the ball, centred, and reduce the KKT residual.
      const double target = sigma * mu;
      const double merit0 = kkt_merit(sf, x, y, s, z, target);
      auto acceptable = [&](double a) {
        const VectorXd xt = x + a * dx;
        VectorXd gt;
        MatrixXd Jt;
        eval_constraints(sf, xt, gt, Jt);
        VectorXd st = s + a * ds;
        st[ml] = -gt[ml];
        if (!(st[ml] >= (1.0 - tau) * s[ml])) return false;
        const VectorXd zt = z + a * dz;
        const VectorXd sz = (st.array() * zt.array()).matrix();
        if (sz.minCoeff() < kCentrality * sz.sum() / m) return false;
        return kkt_merit(sf, xt, y + a * dy, st, zt, target) <= (1.0 - 1e-4 * a) * merit0;
      };
      while (alpha > 1e-12 && !acceptable(alpha)) alpha *= 0.5;
    }
    x += alpha * dx;
    y += alpha * dy;
    s += alpha * ds;
    z += alpha * dz;
  }
}

}  // namespace

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::IterLimit: return "iter_limit";
    case SolveStatus::NumericFailure: return "numeric_failure";
  }
  return "unknown";
}

const char* to_string(FeasibilityStatus status) {
  switch (status) {
    case FeasibilityStatus::Feasible: return "feasible";
    case FeasibilityStatus::Infeasible: return "infeasible";
    case FeasibilityStatus::NumericFailure: return "numeric_failure";
  }
  return "unknown";
}

ConvexProgram::ConvexProgram(int n)
    : Q(MatrixXd::Zero(n, n)),
      c(VectorXd::Zero(n)),
      Aeq(0, n),
      beq(0),
      Ain(0, n),
      bin(0),
      lb(VectorXd::Constant(n, -kInf)),
      ub(VectorXd::Constant(n, kInf)) {}

void ConvexProgram::add_equality(const Eigen::RowVectorXd& row, double rhs) {
  Aeq.conservativeResize(Aeq.rows() + 1, num_vars());
  Aeq.bottomRows(1) = row;
  beq.conservativeResize(beq.size() + 1);
  beq[beq.size() - 1] = rhs;
}

void ConvexProgram::add_inequality(const Eigen::RowVectorXd& row, double rhs) {
  Ain.conservativeResize(Ain.rows() + 1, num_vars());
  Ain.bottomRows(1) = row;
  bin.conservativeResize(bin.size() + 1);
  bin[bin.size() - 1] = rhs;
}

void ConvexProgram::validate() const {
  const int n = num_vars();
  auto fail = [](const char* what) {
    throw std::invalid_argument(std::string("ConvexProgram: ") + what);
  };
  if (Q.rows() != n || Q.cols() != n) fail("Q has wrong shape");
  if (Aeq.cols() != n || Aeq.rows() != beq.size()) fail("equality system shape");
  if (Ain.cols() != n || Ain.rows() != bin.size()) fail("inequality system shape");
  if (lb.size() != n || ub.size() != n) fail("bounds shape");
  for (int j = 0; j < n; ++j) {
    if (lb[j] > ub[j]) fail("lb > ub");
  }
  if (!Q.allFinite() || !c.allFinite() || !Aeq.allFinite() || !beq.allFinite() ||
      !Ain.allFinite()) {
    fail("non-finite data");
  }
  if (n > 0) {
    const double scale = 1.0 + Q.cwiseAbs().maxCoeff();
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      fail("Q is not symmetric");
    }
    if (!Q.isZero(0.0)) {
      const MatrixXd convex = sense == Sense::Maximize ? MatrixXd(-Q) : Q;
      MatrixXd shifted = convex;
      shifted.diagonal().array() += 1e-12 * scale;
      Eigen::LLT<MatrixXd> llt(shifted);
      if (llt.info() != Eigen::Success) fail("objective is not convex");
    }
  }
  if (ball) {
    if (!(ball->radius_sq > 0)) fail("ball radius_sq must be positive");
    if (static_cast<Eigen::Index>(ball->indices.size()) != ball->center.size()) {
      fail("ball center/indices mismatch");
    }
    for (int idx : ball->indices) {
      if (idx < 0 || idx >= n) fail("ball index out of range");
    }
  }
}

double ConvexProgram::evaluate_objective(const VectorXd& x) const {
  return 0.5 * x.dot(Q * x) + c.dot(x) + offset;
}

ProgramSolution solve(const ConvexProgram& program, const SolverOptions& options) {
  program.validate();
  const Standard sf = to_standard(program);
  const CoreResult core = run_ipm(sf, options);

  ProgramSolution sol;
  sol.x = core.x;
  sol.iterations = core.iterations;
  sol.objective = program.evaluate_objective(core.x);
  sol.kkt_residual = std::max({core.pres, core.dres,
                               core.gap / (1.0 + std::abs(core.objective))});
  sol.primal_residual = core.pres;
  sol.complementarity = core.gap;
  sol.eq_duals = core.y;
  sol.in_duals = VectorXd::Zero(program.Ain.rows());
  sol.lb_duals = VectorXd::Zero(program.num_vars());
  sol.ub_duals = VectorXd::Zero(program.num_vars());
  int row = 0;
  for (int i : sf.in_rows) sol.in_duals[i] = core.z[row++];
  for (int j : sf.ub_vars) sol.ub_duals[j] = core.z[row++];
  for (int j : sf.lb_vars) sol.lb_duals[j] = core.z[row++];
  if (sf.ball) sol.ball_dual = core.z[row];

  if (core.status == CoreStatus::Converged) {
    sol.status = SolveStatus::Optimal;
    return sol;
  }

  const Standard ph = to_phase1(sf);
  const CoreResult ph_res = run_ipm(ph, options);
  // Weak duality: with small residuals, t - gap bounds the phase-1 optimum
  // from below even when the run stopped short of convergence.
  const double t = ph_res.x[sf.n()];
  const bool ph_usable = ph_res.status == CoreStatus::Converged ||
                         (ph_res.pres <= options.tolerance && ph_res.dres <= options.tolerance);
  if (!ph_usable) {
    sol.status = SolveStatus::NumericFailure;
    return sol;
  }
  if (t - ph_res.gap > options.infeasibility_threshold) {
    sol.status = SolveStatus::Infeasible;
  } else if (ph_res.status != CoreStatus::Converged) {
    sol.status = SolveStatus::NumericFailure;
  } else if (t > options.infeasibility_threshold) {
    sol.status = SolveStatus::Infeasible;
  } else if (core.status == CoreStatus::Diverged) {
    sol.status = SolveStatus::Unbounded;
  } else if (core.status == CoreStatus::IterLimit) {
    sol.status = SolveStatus::IterLimit;
  } else {
    sol.status = SolveStatus::NumericFailure;
  }
  return sol;
}

FeasibilityStatus check_feasible(const ConvexProgram& program,
                                 const SolverOptions& options) {
  program.validate();
  const Standard sf = to_standard(program);
  const CoreResult ph_res = run_ipm(to_phase1(sf), options);
  if (ph_res.status != CoreStatus::Converged) return FeasibilityStatus::NumericFailure;
  return ph_res.x[sf.n()] > options.infeasibility_threshold
             ? FeasibilityStatus::Infeasible
             : FeasibilityStatus::Feasible;
}

namespace {

void write_row(std::ostream& out, const char* tag, const Eigen::RowVectorXd& row,
               std::optional<double> rhs) {
  out << tag;
  for (int j = 0; j < row.size(); ++j) out << ' ' << fmt::format("{}", row[j]);
  if (rhs) out << ' ' << fmt::format("{}", *rhs);
  out << '\n';
}

std::vector<double> parse_numbers(std::istringstream& in) {
  std::vector<double> vals;
  std::string tok;
  while (in >> tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') {
      throw std::runtime_error("read_program: bad number '" + tok + "'");
    }
    vals.push_back(v);
  }
  return vals;
}

}  // namespace

void write_program(std::ostream& out, const ConvexProgram& p) {
  const int n = p.num_vars();
  out << "# dp-bilevel lp v1\n";
  out << "vars " << n << '\n';
  out << "sense " << (p.sense == Sense::Maximize ? "max" : "min") << '\n';
  out << "offset " << fmt::format("{}", p.offset) << '\n';
  write_row(out, "c", p.c.transpose(), std::nullopt);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (p.Q(i, j) != 0.0) {
        out << "q " << i << ' ' << j << ' ' << fmt::format("{}", p.Q(i, j)) << '\n';
      }
    }
  }
  for (int i = 0; i < p.Aeq.rows(); ++i) write_row(out, "eq", p.Aeq.row(i), p.beq[i]);
  for (int i = 0; i < p.Ain.rows(); ++i) write_row(out, "le", p.Ain.row(i), p.bin[i]);
  write_row(out, "lb", p.lb.transpose(), std::nullopt);
  write_row(out, "ub", p.ub.transpose(), std::nullopt);
  if (p.ball) {
    out << "ball " << fmt::format("{}", p.ball->radius_sq) << ' ' << p.ball->indices.size();
    for (int idx : p.ball->indices) out << ' ' << idx;
    for (int k = 0; k < p.ball->center.size(); ++k) {
      out << ' ' << fmt::format("{}", p.ball->center[k]);
    }
    out << '\n';
  }
}

ConvexProgram read_program(std::istream& in) {
  ConvexProgram p;
  bool have_vars = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "vars") {
      int n = 0;
      ls >> n;
      p = ConvexProgram(n);
      have_vars = true;
      continue;
    }
    if (!have_vars) throw std::runtime_error("read_program: 'vars' must come first");
    const int n = p.num_vars();
    if (tag == "sense") {
      std::string s;
      ls >> s;
      p.sense = s == "max" ? Sense::Maximize : Sense::Minimize;
      continue;
    }
    if (tag == "q") {
      int i = 0, j = 0;
      std::string v;
      ls >> i >> j >> v;
      p.Q(i, j) = std::strtod(v.c_str(), nullptr);
      continue;
    }
    std::vector<double> vals = parse_numbers(ls);
    auto as_row = [&](int len) {
      if (static_cast<int>(vals.size()) < len) {
        throw std::runtime_error("read_program: short row for '" + tag + "'");
      }
      return Eigen::Map<const Eigen::RowVectorXd>(vals.data(), len);
    };
    if (tag == "offset") {
      p.offset = vals.at(0);
    } else if (tag == "c") {
      p.c = as_row(n).transpose();
    } else if (tag == "eq") {
      p.add_equality(as_row(n), vals.at(n));
    } else if (tag == "le") {
      p.add_inequality(as_row(n), vals.at(n));
    } else if (tag == "lb") {
      p.lb = as_row(n).transpose();
    } else if (tag == "ub") {
      p.ub = as_row(n).transpose();
    } else if (tag == "ball") {
      BallConstraint ball;
      ball.radius_sq = vals.at(0);
      const auto k = static_cast<std::size_t>(vals.at(1));
      ball.center.resize(static_cast<Eigen::Index>(k));
      for (std::size_t i = 0; i < k; ++i) {
        ball.indices.push_back(static_cast<int>(vals.at(2 + i)));
        ball.center[static_cast<Eigen::Index>(i)] = vals.at(2 + k + i);
      }
      p.ball = std::move(ball);
    } else {
      throw std::runtime_error("read_program: unknown tag '" + tag + "'");
    }
  }
  return p;
}

}  // namespace dpbl
