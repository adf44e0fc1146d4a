#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dpbl/types.hpp"

namespace dpbl {

struct Bus {
  int id = 0;
  bool has_demand = false;
};

/// Linear-cost generator, quantities in per-unit; cost_c1 in $/p.u.
struct Generator {
  int bus = 0;  // index into Network::buses
  double cost_c1 = 0.0;
  double cost_c0 = 0.0;
  double p_min = 0.0;
  double p_max = 0.0;
};

/// DC line; flow = susceptance * (theta_from - theta_to).
struct Line {
  int from = 0;  // index into Network::buses
  int to = 0;
  double susceptance = 0.0;
  /// +inf when unconstrained.
  double flow_limit = 0.0;
};

struct Network {
  double base_mva = 100.0;
  std::vector<Bus> buses;
  int slack_bus = 0;  // index into buses
  std::vector<Generator> generators;
  std::vector<Line> lines;

  /// Bus indices carrying a demand, in bus order. Position k of a
  /// DemandVector refers to demand_buses()[k].
  std::vector<int> demand_buses() const;
  std::size_t num_demands() const;

  std::optional<int> bus_index(int id) const;

  bool connected() const;

  /// Throws std::invalid_argument when a structural invariant fails.
  void validate() const;
};

/// A network together with the demands recorded in its case file.
struct Case {
  Network network;
  DemandVector demand;
};

struct DcOpfInstance {
  Network network;
  CostTarget cost_target;
  double beta = 0.0;
  /// Optional box on the demand variables of the relaxation and push-up
  /// programs; unbounded when absent.
  std::optional<std::pair<double, double>> demand_bounds;

  void validate() const;
};

}  // namespace dpbl
