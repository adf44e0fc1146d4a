#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dpbl {

enum class Sense { Minimize, Maximize };

/// Convex quadratic ball ||x_S - center||^2 <= radius_sq over a subset S of
/// the variables.
struct BallConstraint {
  std::vector<int> indices;
  Eigen::VectorXd center;
  double radius_sq = 1.0;
};

/// Normal form shared by every subproblem:
///
///   min/max  1/2 x'Qx + c'x + offset
///   s.t.     Aeq x  = beq
///            Ain x <= bin
///            lb <= x <= ub          (infinite entries allowed)
///            ||x_S - z||^2 <= r^2   (at most one)
struct ConvexProgram {
  ConvexProgram() = default;
  /// n variables, zero objective, no constraints, free bounds.
  explicit ConvexProgram(int n);

  int num_vars() const { return static_cast<int>(c.size()); }

  /// Appends a row to the equality / inequality systems.
  void add_equality(const Eigen::RowVectorXd& row, double rhs);
  void add_inequality(const Eigen::RowVectorXd& row, double rhs);

  /// Throws std::invalid_argument on inconsistent dimensions, an asymmetric
  /// or indefinite Q, or a non-positive ball radius.
  void validate() const;

  double evaluate_objective(const Eigen::VectorXd& x) const;

  Eigen::MatrixXd Q;
  Eigen::VectorXd c;
  double offset = 0.0;
  Eigen::MatrixXd Aeq;
  Eigen::VectorXd beq;
  Eigen::MatrixXd Ain;
  Eigen::VectorXd bin;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;
  std::optional<BallConstraint> ball;
  Sense sense = Sense::Minimize;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterLimit, NumericFailure };
enum class FeasibilityStatus { Feasible, Infeasible, NumericFailure };

const char* to_string(SolveStatus status);
const char* to_string(FeasibilityStatus status);

struct ProgramSolution {
  SolveStatus status = SolveStatus::NumericFailure;
  Eigen::VectorXd x;
  /// Objective in the program's own sense, offset included.
  double objective = 0.0;
  /// Multipliers of the minimization form: stationarity reads
  /// Qx + c + Aeq'y + Ain'z - lb_duals + ub_duals + 2 w (x_S - center) = 0.
  Eigen::VectorXd eq_duals;
  Eigen::VectorXd in_duals;
  Eigen::VectorXd lb_duals;
  Eigen::VectorXd ub_duals;
  double ball_dual = 0.0;
  int iterations = 0;
  double kkt_residual = 0.0;
  /// Scaled primal infeasibility of the returned x.
  double primal_residual = 0.0;
  /// Sum of s_i * z_i over all inequalities at termination.
  double complementarity = 0.0;

  bool optimal() const { return status == SolveStatus::Optimal; }
};

struct SolverOptions {
  int max_iterations = 200;
  double tolerance = 1e-9;
  double regularization = 1e-9;
  double retry_regularization = 1e-7;
  /// Phase-1 optimal slack above which a program is declared infeasible.
  double infeasibility_threshold = 1e-7;
};

/// Mehrotra predictor-corrector primal-dual interior point method.
ProgramSolution solve(const ConvexProgram& program,
                      const SolverOptions& options = {});

/// Phase-1 feasibility test: minimizes the largest constraint violation.
FeasibilityStatus check_feasible(const ConvexProgram& program,
                                 const SolverOptions& options = {});

/// Plain-text, row-per-constraint dump used by --dump-lp.
void write_program(std::ostream& out, const ConvexProgram& program);
ConvexProgram read_program(std::istream& in);

}  // namespace dpbl
