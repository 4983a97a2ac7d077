#pragma once

// Shared builders for test fixtures and randomized instances.

#include <algorithm>
#include <cstdio>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "vanet/netgraph.hpp"
#include "vanet/optimizer.hpp"
#include "vanet/regulation.hpp"

namespace fixture {

inline std::string vid(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "v%02d", i);
  return buf;
}

inline std::string rid(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "r%d", i);
  return buf;
}

inline vanet::VehicleState vehicle(int i, double x, double y, double speed = 10.0, double heading = 0.0) {
  return {vid(i), x, y, speed, heading};
}

inline vanet::RsuNode rsu(int i, double x, double y, double capacity = 100.0) { return {rid(i), x, y, capacity}; }

inline vanet::NetworkSnapshot snapshot(std::vector<vanet::VehicleState> vehicles, std::vector<vanet::RsuNode> rsus = {},
                                       double step_s = 1.0) {
  vanet::NetworkSnapshot s;
  s.step_s = step_s;
  std::sort(vehicles.begin(), vehicles.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  s.vehicles = std::move(vehicles);
  s.rsus = std::move(rsus);
  return s;
}

inline vanet::CommPair pair(const vanet::Network& net, int a, int b, double demand = 0.5) {
  if (a > b) std::swap(a, b);
  return {net.id(a), net.id(b), a, b, demand};
}

/// Problem over a snapshot with explicit key pairs and uniform fused demand.
inline vanet::OptimizationProblem problem(const vanet::NetworkSnapshot& snap,
                                          const std::vector<std::pair<int, int>>& pairs,
                                          const vanet::LinkLimits& limits = {},
                                          const vanet::RegulationState& reg = vanet::RegulationState{},
                                          const vanet::SolverParams& solver = {}) {
  vanet::OptimizationProblem p;
  p.network = vanet::make_network(snap);
  p.candidates = vanet::candidate_links(*p.network, {limits.v2v_range_m, limits.v2i_range_m, 0.7, 0.7});
  for (auto [a, b] : pairs) p.pairs.push_back(pair(*p.network, a, b));
  p.fused_demand.assign(p.network->node_count(), 0.5);
  p.regulation = reg;
  p.limits = limits;
  p.solver = solver;
  return p;
}

struct RandomShape {
  int min_vehicles = 3;
  int max_vehicles = 8;
  int max_rsus = 2;
  std::size_t max_candidates = 14;
  double width = 900.0;
  double height = 400.0;
  double k_min2_probability = 0.15;
};

/// Random desk-scale instance: vehicles and RSUs scattered over a rectangle,
/// random caps, 1-3 vehicle key pairs, random regulation weights. Resampled
/// until the candidate pool is non-empty and within `max_candidates`.
inline vanet::OptimizationProblem random_problem(std::mt19937_64& rng, const RandomShape& shape = {}) {
  std::uniform_real_distribution<double> ux(0.0, shape.width);
  std::uniform_real_distribution<double> uy(0.0, shape.height);
  std::uniform_real_distribution<double> speed(0.0, 15.0);
  std::uniform_real_distribution<double> heading(0.0, 6.283185307179586);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (true) {
    const int n = std::uniform_int_distribution<int>(shape.min_vehicles, shape.max_vehicles)(rng);
    const int m = std::uniform_int_distribution<int>(0, shape.max_rsus)(rng);
    std::vector<vanet::VehicleState> vs;
    for (int i = 0; i < n; ++i) vs.push_back(vehicle(i, ux(rng), uy(rng), speed(rng), heading(rng)));
    std::vector<vanet::RsuNode> rs;
    for (int j = 0; j < m; ++j) rs.push_back(rsu(j, ux(rng), uy(rng), 20.0 + 80.0 * unit(rng)));
    vanet::LinkLimits limits;
    limits.max_v2v_degree = std::uniform_int_distribution<int>(1, 4)(rng);
    limits.max_v2i_degree = std::uniform_int_distribution<int>(1, 3)(rng);
    vanet::OptimizationProblem p;
    p.network = vanet::make_network(snapshot(vs, rs));
    p.candidates = vanet::candidate_links(*p.network, {limits.v2v_range_m, limits.v2i_range_m, 0.7, 0.7});
    if (p.candidates.size() == 0 || p.candidates.size() > shape.max_candidates) continue;
    const int pair_count = std::uniform_int_distribution<int>(1, std::min(3, n * (n - 1) / 2))(rng);
    std::vector<std::pair<int, int>> chosen;
    while (static_cast<int>(chosen.size()) < pair_count) {
      int a = std::uniform_int_distribution<int>(0, n - 1)(rng);
      int b = std::uniform_int_distribution<int>(0, n - 1)(rng);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      if (std::find(chosen.begin(), chosen.end(), std::pair{a, b}) != chosen.end()) continue;
      chosen.push_back({a, b});
    }
    for (auto [a, b] : chosen) p.pairs.push_back(pair(*p.network, a, b, 0.3 + 0.7 * unit(rng)));
    for (int i = 0; i < p.network->node_count(); ++i) p.fused_demand.push_back(unit(rng));
    vanet::RegulationState reg;
    reg.lambda1 = 0.1 + 0.8 * unit(rng);
    reg.lambda2 = 1.0 - reg.lambda1;
    reg.l_norm = 2.0 + 10.0 * unit(rng);
    reg.t_norm_s = 0.002 + 0.05 * unit(rng);
    p.regulation = reg;
    p.limits = limits;
    p.solver.k_min = unit(rng) < shape.k_min2_probability ? 2 : 1;
    return p;
  }
}

/// Random selection over the problem's candidate pool, caps not enforced.
inline std::vector<bool> random_selection(std::mt19937_64& rng, std::size_t size, double density) {
  std::bernoulli_distribution keep(density);
  std::vector<bool> sel(size);
  for (std::size_t i = 0; i < size; ++i) sel[i] = keep(rng);
  return sel;
}

}  // namespace fixture
