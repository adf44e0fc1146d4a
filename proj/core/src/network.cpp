#include "dpbl/network.hpp"

#include <cmath>
#include <stdexcept>

namespace dpbl {

std::vector<int> Network::demand_buses() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].has_demand) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::size_t Network::num_demands() const {
  std::size_t n = 0;
  for (const Bus& b : buses) n += b.has_demand ? 1 : 0;
  return n;
}

std::optional<int> Network::bus_index(int id) const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == id) return static_cast<int>(i);
  }
  return std::nullopt;
}

bool Network::connected() const {
  if (buses.empty()) return false;
  std::vector<std::vector<int>> adj(buses.size());
  for (const Line& l : lines) {
    adj[static_cast<std::size_t>(l.from)].push_back(l.to);
    adj[static_cast<std::size_t>(l.to)].push_back(l.from);
  }
  std::vector<bool> seen(buses.size(), false);
  std::vector<int> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == buses.size();
}

void Network::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("Network: " + what);
  };
  if (!(base_mva > 0)) fail("base_mva must be positive");
  if (buses.empty()) fail("no buses");
  const int nb = static_cast<int>(buses.size());
  if (slack_bus < 0 || slack_bus >= nb) fail("slack bus out of range");
  for (const Generator& g : generators) {
    if (g.bus < 0 || g.bus >= nb) fail("generator bus out of range");
    if (g.p_min > g.p_max) fail("generator p_min > p_max");
    if (g.cost_c1 < 0) fail("generator cost_c1 must be nonnegative");
  }
  for (const Line& l : lines) {
    if (l.from < 0 || l.from >= nb || l.to < 0 || l.to >= nb) {
      fail("line endpoint out of range");
    }
    if (l.from == l.to) fail("line is a self-loop");
    if (!(l.flow_limit > 0)) fail("line flow_limit must be positive");
    if (!std::isfinite(l.susceptance) || l.susceptance == 0.0) {
      fail("line susceptance must be finite and nonzero");
    }
  }
  if (!connected()) fail("network is not connected");
}

void DcOpfInstance::validate() const {
  network.validate();
  if (!(beta > 0)) throw std::invalid_argument("DcOpfInstance: beta must be positive");
  if (!std::isfinite(cost_target.f_tilde)) {
    throw std::invalid_argument("DcOpfInstance: f_tilde must be finite");
  }
  if (demand_bounds && demand_bounds->first > demand_bounds->second) {
    throw std::invalid_argument("DcOpfInstance: demand_bounds lo > hi");
  }
}

}  // namespace dpbl
