#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "vanet/fusion.hpp"
#include "vanet/metrics.hpp"
#include "vanet/netgraph.hpp"
#include "vanet/regulation.hpp"

namespace vanet {

struct SolverParams {
  double xi = 0.01;    // weight of the vehicle count in Q
  double zeta = 1.0;   // weight of the link density in Q
  double q0 = 1.0;     // exact mode below this complexity
  double delta0 = 0.01;
  int k_min = 1;
  int exact_max_vehicles = 12;
  double exact_time_budget_s = 5.0;
  int enumeration_max_links = 12;  // full enumeration instead of branch-and-bound
  int lifetime_min_cycles = 2;
  int lifetime_horizon_cycles = 100;
  double utility_adaptability = 0.5;
  double utility_demand = 0.3;
  double utility_distance = 0.2;
};

enum class SolveMode { exact, heuristic };

const char* to_string(SolveMode mode);

/// Q = xi * N + zeta * rho.
double complexity(int vehicle_count, double link_density, const SolverParams& params);
double complexity(const NetworkSnapshot& snapshot, const GraphStats& stats, const SolverParams& params);

/// Exact mode when Q < Q0 and the vehicle count fits the exact budget.
SolveMode select_mode(int vehicle_count, double link_density, const SolverParams& params);

/// Everything the solvers see for one control step.
struct OptimizationProblem {
  NetworkPtr network;
  CandidateLinks candidates;
  CommPairSet pairs;
  std::vector<double> fused_demand;  // per node; empty = no fused features
  RegulationState regulation;
  LinkLimits limits;
  MetricParams metrics;
  SolverParams solver;
};

/// Assembles a problem from a snapshot using the fused feature matrix's
/// demand column.
OptimizationProblem make_problem(NetworkPtr network, const CandidateLinks& candidates, const CommPairSet& pairs,
                                 const FeatureMatrix* fused, const RegulationState& regulation,
                                 const LinkLimits& limits, const MetricParams& metrics, const SolverParams& solver);

/// Lexicographic solution quality: fewer key pairs short of k_min paths,
/// then lower composite objective, then fewer links.
struct ObjectiveValue {
  int violations = 0;
  double objective = 0.0;
  std::size_t links = 0;
  double l_avg = 0.0;
  double mean_delay_s = 0.0;
};

/// Scores a strategy against the problem's key pairs and regulation state.
/// The strategy must satisfy the link constraints.
ObjectiveValue evaluate_strategy(const OptimizationProblem& problem, const LinkStrategy& strategy);

/// Equal-share bandwidth strategy from a selection over the problem's
/// candidate pool (V2V candidates first, then V2I, in candidate order).
LinkStrategy strategy_from_selection(const OptimizationProblem& problem, const std::vector<bool>& selected);

/// Canonical pool position of every active link of `strategy`; links outside
/// the pool are ignored.
std::vector<int> selection_indices(const OptimizationProblem& problem, const LinkStrategy& strategy);

struct ExactResult {
  LinkStrategy strategy;
  ObjectiveValue value;
  bool optimal = true;      // search finished within the time budget
  bool enumerated = false;  // solved by full enumeration
  std::size_t nodes_explored = 0;
  CommPairSet unreachable;  // key pairs left short of k_min paths
};

/// Globally optimal strategy: minimises (violations, objective, link count,
/// lexicographic edge order) over all cap-respecting subsets of the
/// candidate pool, with equal-share V2I bandwidth.
ExactResult solve_exact(const OptimizationProblem& problem);

struct HeuristicResult {
  LinkStrategy strategy;
  ObjectiveValue value;
  CommPairSet unreachable;
};

/// Deterministic construction: key-pair routing over the candidate graph,
/// objective-driven pruning and insertion in utility order, V2I relay
/// repair for pairs short of k_min paths, then objective-neutral fill.
HeuristicResult solve_heuristic(const OptimizationProblem& problem);

/// Utility used to rank candidate links; index follows the canonical pool order.
std::vector<double> link_utilities(const OptimizationProblem& problem);

inline constexpr int kLifetimeUnbounded = std::numeric_limits<int>::max();

/// Whole control cycles until the pair drifts beyond `range_m` assuming
/// constant velocities; 0 when already out of range, kLifetimeUnbounded
/// for (near) zero relative speed or when beyond `horizon_cycles`.
int predict_link_lifetime(const VehicleState& a, const VehicleState& b, double range_m, double step_s,
                          int horizon_cycles = 100);
int predict_link_lifetime(const VehicleState& vehicle, const RsuNode& rsu, double range_m, double step_s,
                          int horizon_cycles = 100);

struct VerifyResult {
  bool pass = false;
  std::string reason;     // empty on pass
  LinkStrategy strategy;  // possibly corrected
  std::vector<std::string> removed;  // "a-b" for every frozen link
  std::size_t supplemented = 0;
  CommPairSet unreachable;  // key pairs still short of k_min paths (best effort)
};

/// Three-step validity check: constraints, lifetime pruning, then
/// supplementing from the distance-feasible candidate pool for key pairs
/// short of k_min paths. Over-allocated RSU bandwidth is unrepairable.
VerifyResult verify(const LinkStrategy& candidate, const OptimizationProblem& problem);

/// Drops links whose endpoints left the network or moved out of range.
LinkStrategy carry_over(const LinkStrategy& previous, const Network& network, const LinkLimits& limits);

struct CandidateOutcome {
  LinkStrategy candidate;  // solver output after verification
  LinkStrategy result;     // topology in force after the step
  PathDelay current;
  PathDelay predicted;
  SolveMode mode = SolveMode::heuristic;
  double q = 0.0;
  double delta = 0.0;
  bool degenerate_baseline = false;
  VerifyResult verification;
  bool applied = false;            // global candidate adopted
  bool locally_corrected = false;  // current topology repaired instead
};

/// One global adjustment step against the current (carried-over) topology.
CandidateOutcome adjust(const LinkStrategy& current, const OptimizationProblem& problem);

}  // namespace vanet
