#include "dpbl/dcopf.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace dpbl {

using Eigen::RowVectorXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_demand_size(const Network& network, const DemandVector& d) {
  if (d.size() != network.num_demands()) {
    throw DimensionError(fmt::format("demand vector has {} entries, network has {} demand buses",
                                     d.size(), network.num_demands()));
  }
}

// Objective-free program holding the follower constraints over `layout`.
// When the layout has demand columns, balance rows read
// gen - d - net_outflow = 0; otherwise gen - net_outflow = d_bus.
ConvexProgram follower_constraints(const Network& net, const DcOpfLayout& layout,
                                   const DemandVector* fixed_demand) {
  ConvexProgram p(layout.size());
  const int nb = static_cast<int>(net.buses.size());
  const std::vector<int> demand_buses = net.demand_buses();
  std::vector<int> demand_slot(static_cast<std::size_t>(nb), -1);
  for (std::size_t k = 0; k < demand_buses.size(); ++k) {
    demand_slot[static_cast<std::size_t>(demand_buses[k])] = static_cast<int>(k);
  }

  for (int bus = 0; bus < nb; ++bus) {
    RowVectorXd row = RowVectorXd::Zero(layout.size());
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
      if (net.generators[g].bus == bus) row[layout.generation(static_cast<int>(g))] += 1.0;
    }
    for (const Line& l : net.lines) {
      if (l.from == bus) {
        row[layout.angle(l.from)] -= l.susceptance;
        row[layout.angle(l.to)] += l.susceptance;
      } else if (l.to == bus) {
        row[layout.angle(l.from)] += l.susceptance;
        row[layout.angle(l.to)] -= l.susceptance;
      }
    }
    double rhs = 0.0;
    const int slot = demand_slot[static_cast<std::size_t>(bus)];
    if (slot >= 0) {
      if (fixed_demand) {
        rhs = (*fixed_demand)[static_cast<std::size_t>(slot)];
      } else {
        row[layout.demand(slot)] = -1.0;
      }
    }
    p.add_equality(row, rhs);
  }

  RowVectorXd slack = RowVectorXd::Zero(layout.size());
  slack[layout.angle(net.slack_bus)] = 1.0;
  p.add_equality(slack, 0.0);

  for (const Line& l : net.lines) {
    if (!std::isfinite(l.flow_limit)) continue;
    RowVectorXd row = RowVectorXd::Zero(layout.size());
    row[layout.angle(l.from)] = l.susceptance;
    row[layout.angle(l.to)] = -l.susceptance;
    p.add_inequality(row, l.flow_limit);
    p.add_inequality(-row, l.flow_limit);
  }

  for (std::size_t g = 0; g < net.generators.size(); ++g) {
    const int col = layout.generation(static_cast<int>(g));
    p.lb[col] = net.generators[g].p_min;
    p.ub[col] = net.generators[g].p_max;
  }
  return p;
}

RowVectorXd cost_row(const Network& net, const DcOpfLayout& layout) {
  RowVectorXd row = RowVectorXd::Zero(layout.size());
  for (std::size_t g = 0; g < net.generators.size(); ++g) {
    row[layout.generation(static_cast<int>(g))] = net.generators[g].cost_c1;
  }
  return row;
}

double fixed_cost(const Network& net) {
  double c0 = 0.0;
  for (const Generator& g : net.generators) c0 += g.cost_c0;
  return c0;
}

DcOpfLayout leader_layout(const Network& net) {
  return DcOpfLayout{static_cast<int>(net.num_demands()),
                     static_cast<int>(net.generators.size()),
                     static_cast<int>(net.buses.size())};
}

// Follower constraints plus f_tilde - beta <= f(p) <= f_tilde + beta.
ConvexProgram leader_program(const DcOpfInstance& inst) {
  const Network& net = inst.network;
  const DcOpfLayout layout = leader_layout(net);
  ConvexProgram p = follower_constraints(net, layout, nullptr);
  const RowVectorXd cost = cost_row(net, layout);
  const double c0 = fixed_cost(net);
  p.add_inequality(cost, inst.cost_target.f_tilde + inst.beta - c0);
  p.add_inequality(-cost, -(inst.cost_target.f_tilde - inst.beta - c0));
  if (inst.demand_bounds) {
    for (int k = 0; k < layout.num_demands; ++k) {
      p.lb[layout.demand(k)] = inst.demand_bounds->first;
      p.ub[layout.demand(k)] = inst.demand_bounds->second;
    }
  }
  return p;
}

}  // namespace

ConvexProgram build_follower(const Network& network, const DemandVector& d) {
  check_demand_size(network, d);
  const DcOpfLayout layout{0, static_cast<int>(network.generators.size()),
                           static_cast<int>(network.buses.size())};
  ConvexProgram p = follower_constraints(network, layout, &d);
  p.c = cost_row(network, layout).transpose();
  p.offset = fixed_cost(network);
  return p;
}

ConvexProgram build_follower(const DcOpfInstance& inst, const DemandVector& d) {
  return build_follower(inst.network, d);
}

ConvexProgram build_hpr(const DcOpfInstance& inst, const DemandVector& d_tilde) {
  check_demand_size(inst.network, d_tilde);
  ConvexProgram p = leader_program(inst);
  const int nd = static_cast<int>(d_tilde.size());
  double center_sq = 0.0;
  for (int k = 0; k < nd; ++k) {
    p.Q(k, k) = 2.0;
    p.c[k] = -2.0 * d_tilde[static_cast<std::size_t>(k)];
    center_sq += d_tilde[static_cast<std::size_t>(k)] * d_tilde[static_cast<std::size_t>(k)];
  }
  p.offset = center_sq;
  return p;
}

ConvexProgram build_pushup(const DcOpfInstance& inst, const DemandVector& d_tilde,
                           double delta) {
  check_demand_size(inst.network, d_tilde);
  if (!(delta >= 0) || !std::isfinite(delta)) {
    throw std::invalid_argument("build_pushup: delta must be finite and >= 0");
  }
  ConvexProgram p = leader_program(inst);
  p.sense = Sense::Maximize;
  const int nd = static_cast<int>(d_tilde.size());
  for (int k = 0; k < nd; ++k) p.c[k] = 1.0;
  if (delta == 0.0) {
    for (int k = 0; k < nd; ++k) {
      RowVectorXd row = RowVectorXd::Zero(p.num_vars());
      row[k] = 1.0;
      p.add_equality(row, d_tilde[static_cast<std::size_t>(k)]);
    }
  } else if (nd > 0) {
    BallConstraint ball;
    ball.center.resize(nd);
    for (int k = 0; k < nd; ++k) {
      ball.indices.push_back(k);
      ball.center[k] = d_tilde[static_cast<std::size_t>(k)];
    }
    ball.radius_sq = delta;
    p.ball = std::move(ball);
  }
  return p;
}

double generation_cost(const Network& network, std::span<const double> dispatch) {
  if (dispatch.size() != network.generators.size()) {
    throw DimensionError("generation_cost: dispatch length mismatch");
  }
  double cost = 0.0;
  for (std::size_t g = 0; g < dispatch.size(); ++g) {
    cost += network.generators[g].cost_c1 * dispatch[g] + network.generators[g].cost_c0;
  }
  return cost;
}

DcOpfProblem::DcOpfProblem(DcOpfInstance inst, SolverOptions options)
    : inst_(std::move(inst)), options_(options) {
  inst_.validate();
}

ProgramSolution DcOpfProblem::run(const ConvexProgram& program, const char* kind) const {
  if (dump_dir_) {
    const int id = dump_counter_.fetch_add(1);
    std::ofstream out(*dump_dir_ / fmt::format("{}_{:04d}.lp", kind, id));
    write_program(out, program);
  }
  return solve(program, options_);
}

FollowerResult DcOpfProblem::follower(const DemandVector& d) const {
  const ProgramSolution sol = run(build_follower(inst_, d), "follower");
  FollowerResult out;
  switch (sol.status) {
    case SolveStatus::Optimal: out.status = FollowerStatus::Optimal; break;
    case SolveStatus::Infeasible: out.status = FollowerStatus::Infeasible; return out;
    default: out.status = FollowerStatus::NumericFailure; return out;
  }
  out.objective = sol.objective;
  const std::size_t ng = inst_.network.generators.size();
  out.dispatch.assign(sol.x.data(), sol.x.data() + ng);
  return out;
}

LeaderPoint DcOpfProblem::leader_point(const ProgramSolution& sol, DemandRole role) const {
  LeaderPoint out;
  switch (sol.status) {
    case SolveStatus::Optimal: out.status = SubproblemStatus::Optimal; break;
    case SolveStatus::Infeasible: out.status = SubproblemStatus::Infeasible; return out;
    default: out.status = SubproblemStatus::NumericFailure; return out;
  }
  const DcOpfLayout layout = leader_layout(inst_.network);
  out.demand = DemandVector(
      std::vector<double>(sol.x.data(), sol.x.data() + layout.num_demands), role);
  out.dispatch.assign(sol.x.data() + layout.generation(0),
                      sol.x.data() + layout.generation(layout.num_generators));
  out.dispatch_cost = generation_cost(inst_.network, out.dispatch);
  return out;
}

LeaderPoint DcOpfProblem::high_point(const DemandVector& d_tilde) const {
  return leader_point(run(build_hpr(inst_, d_tilde), "hpr"), DemandRole::HprPoint);
}

LeaderPoint DcOpfProblem::push_up(const DemandVector& d_tilde, double delta) const {
  return leader_point(run(build_pushup(inst_, d_tilde, delta), "pushup"),
                      DemandRole::PushUpPoint);
}

namespace fixtures {

Case onebus_2gen() {
  Network net;
  net.base_mva = 100.0;
  net.buses = {Bus{1, true}};
  net.slack_bus = 0;
  net.generators = {Generator{0, 1.0, 0.0, 0.0, 1.0}, Generator{0, 2.0, 0.0, 0.0, 1.0}};
  return Case{std::move(net), DemandVector({0.5})};
}

Case tri_3bus() {
  Network net;
  net.base_mva = 100.0;
  net.buses = {Bus{1, false}, Bus{2, true}, Bus{3, true}};
  net.slack_bus = 0;
  net.generators = {Generator{0, 1.0, 0.0, 0.0, 1.0}, Generator{1, 2.0, 0.0, 0.0, 1.0},
                    Generator{2, 3.0, 0.0, 0.0, 1.0}};
  net.lines = {Line{0, 1, 10.0, 0.4}, Line{0, 2, 10.0, 0.4}, Line{1, 2, 10.0, 0.4}};
  return Case{std::move(net), DemandVector({0.5, 0.4})};
}

}  // namespace fixtures

}  // namespace dpbl
