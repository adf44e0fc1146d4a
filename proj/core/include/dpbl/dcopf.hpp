#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <optional>

#include "dpbl/network.hpp"
#include "dpbl/solver.hpp"
#include "dpbl/types.hpp"

namespace dpbl {

/// Column layout of the DC-OPF programs. The follower has no demand
/// columns; the relaxation and push-up programs put demands first.
struct DcOpfLayout {
  int num_demands = 0;  // zero for the follower
  int num_generators = 0;
  int num_buses = 0;

  int demand(int k) const { return k; }
  int generation(int g) const { return num_demands + g; }
  int angle(int b) const { return num_demands + num_generators + b; }
  int size() const { return num_demands + num_generators + num_buses; }
};

/// O(d): min sum c1 p + c0 subject to DC power balance, line limits and
/// generator bounds, with theta_slack = 0. Demands only enter the balance
/// right-hand sides.
ConvexProgram build_follower(const Network& network, const DemandVector& d);
ConvexProgram build_follower(const DcOpfInstance& inst, const DemandVector& d);

/// High point relaxation: min ||d - d_tilde||^2 over (d, p, theta) with the
/// follower constraints and the cost band |f(p) - f_tilde| <= beta.
ConvexProgram build_hpr(const DcOpfInstance& inst, const DemandVector& d_tilde);

/// Push-up program: max sum d over (d, p, theta) with the follower
/// constraints, the cost band and ||d - d_tilde||^2 <= delta. A zero delta
/// pins d to d_tilde with equalities.
ConvexProgram build_pushup(const DcOpfInstance& inst, const DemandVector& d_tilde,
                           double delta);

/// Linear generation cost of a dispatch.
double generation_cost(const Network& network, std::span<const double> dispatch);

/// The DC-OPF follower as a ParametricProblem backed by the interior point
/// solver. Optionally dumps every program it solves to a directory.
class DcOpfProblem final : public ParametricProblem {
 public:
  explicit DcOpfProblem(DcOpfInstance inst, SolverOptions options = {});

  void set_dump_dir(std::optional<std::filesystem::path> dir) { dump_dir_ = std::move(dir); }

  const DcOpfInstance& instance() const { return inst_; }

  std::size_t demand_size() const override { return inst_.network.num_demands(); }
  const CostTarget& target() const override { return inst_.cost_target; }
  double beta() const override { return inst_.beta; }

  FollowerResult follower(const DemandVector& d) const override;
  LeaderPoint high_point(const DemandVector& d_tilde) const override;
  LeaderPoint push_up(const DemandVector& d_tilde, double delta) const override;

 private:
  ProgramSolution run(const ConvexProgram& program, const char* kind) const;
  LeaderPoint leader_point(const ProgramSolution& sol, DemandRole role) const;

  DcOpfInstance inst_;
  SolverOptions options_;
  std::optional<std::filesystem::path> dump_dir_;
  mutable std::atomic<int> dump_counter_{0};
};

/// Bundled desk-scale fixtures.
namespace fixtures {

/// One bus, G1 (c1 = 1, p in [0, 1]) and G2 (c1 = 2, p in [0, 1]), no lines,
/// demand 0.5 p.u., base 100 MVA.
Case onebus_2gen();

/// Triangle, susceptance 10 on every line, limits 0.4 p.u., one generator
/// per bus with c1 = 1, 2, 3 and p_max = 1, demands at buses 2 and 3.
Case tri_3bus();

}  // namespace fixtures

}  // namespace dpbl
