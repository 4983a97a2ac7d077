#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vanet/errors.hpp"
#include "vanet/mobility.hpp"

namespace vanet {

/// Range and degree caps that every active topology must satisfy. The
/// per-RSU bandwidth cap comes from RsuNode::bandwidth_capacity.
struct LinkLimits {
  double v2v_range_m = 300.0;
  double v2i_range_m = 500.0;
  int max_v2v_degree = 5;
  int max_v2i_degree = 10;
};

/// Speeds below this are treated as parked when scoring link adaptability.
inline constexpr double kParkedSpeedMps = 0.1;

/// Motion-similarity score of a vehicle pair:
/// alpha * min(s_a, s_b) / max(s_a, s_b) + (1 - alpha) * cos|theta_a - theta_b|.
/// The speed ratio is 1 when both vehicles are parked and 0 when exactly one is.
double link_adaptability(const VehicleState& a, const VehicleState& b, double alpha);

/// Immutable node index over one snapshot. Vehicles occupy indices
/// [0, N), RSUs [N, N + M).
class Network {
 public:
  explicit Network(NetworkSnapshot snapshot);

  const NetworkSnapshot& snapshot() const { return snapshot_; }
  int vehicle_count() const { return vehicle_count_; }
  int rsu_count() const { return static_cast<int>(snapshot_.rsus.size()); }
  int node_count() const { return vehicle_count_ + rsu_count(); }
  bool is_rsu(int node) const { return node >= vehicle_count_; }

  const std::string& id(int node) const;
  /// Position of the node id in lexicographic order over all node ids.
  int rank(int node) const { return rank_[node]; }
  std::optional<int> find(const std::string& id) const;
  /// Throws LookupError for unknown ids.
  int index_of(const std::string& id) const;

  double x(int node) const { return xs_[node]; }
  double y(int node) const { return ys_[node]; }
  double distance(int a, int b) const;

  const VehicleState& vehicle(int node) const { return snapshot_.vehicles[node]; }
  const RsuNode& rsu(int node) const { return snapshot_.rsus[node - vehicle_count_]; }

 private:
  NetworkSnapshot snapshot_;
  int vehicle_count_ = 0;
  std::vector<double> xs_;
  std::vector<double> ys_;
  std::vector<int> rank_;
  std::unordered_map<std::string, int> index_;
};

using NetworkPtr = std::shared_ptr<const Network>;

inline NetworkPtr make_network(NetworkSnapshot snapshot) {
  return std::make_shared<const Network>(std::move(snapshot));
}

// ---------------------------------------------------------------------------
// Link strategy

/// The decision variables of one control step: active V2V pairs, active V2I
/// pairs and the bandwidth each RSU grants to its attached vehicles.
struct LinkStrategy {
  std::set<std::pair<std::string, std::string>> v2v;  // (smaller id, larger id)
  std::set<std::pair<std::string, std::string>> v2i;  // (vehicle id, rsu id)
  std::map<std::pair<std::string, std::string>, double> v2i_bandwidth;  // Mbps

  void add_v2v(const std::string& a, const std::string& b);
  void add_v2i(const std::string& vehicle, const std::string& rsu, double mbps);
  bool has_v2v(const std::string& a, const std::string& b) const;
  std::size_t link_count() const { return v2v.size() + v2i.size(); }
  bool empty() const { return v2v.empty() && v2i.empty(); }

  bool operator==(const LinkStrategy&) const = default;
};

/// Sets every RSU's allocations to equal shares of its capacity.
void allocate_equal_shares(LinkStrategy& strategy, const Network& network);

/// First violated constraint of `strategy` over `network`, if any. Checks
/// node existence, self links, bandwidth keys, V2V/V2I ranges, V2V/V2I
/// degree caps and per-RSU bandwidth sums, in that order.
std::optional<ConstraintViolation> check_constraints(const Network& network, const LinkStrategy& strategy,
                                                     const LinkLimits& limits);

// ---------------------------------------------------------------------------
// Topology

enum class LinkKind { v2v, v2i };

struct Link {
  int a = 0;  // v2v: smaller index; v2i: the vehicle
  int b = 0;  // v2v: larger index; v2i: the RSU
  LinkKind kind = LinkKind::v2v;
  double allocated_mbps = 0.0;  // b_{n,m} for V2I links, 0 for V2V
};

struct Adjacent {
  int node = 0;
  int link = 0;
};

/// A snapshot plus an active link set. All links are undirected.
class Topology {
 public:
  /// Validates `strategy`; throws ConstraintViolation naming the first
  /// violated constraint.
  Topology(NetworkPtr network, const LinkStrategy& strategy, const LinkLimits& limits);

  /// Builds a topology from already-validated links (no constraint checks).
  static Topology from_links(NetworkPtr network, std::vector<Link> links);

  const Network& network() const { return *network_; }
  const NetworkPtr& network_ptr() const { return network_; }
  const std::vector<Link>& links() const { return links_; }
  /// Neighbours sorted by node rank.
  std::span<const Adjacent> neighbors(int node) const;
  /// Number of active links incident to the node.
  int degree(int node) const { return degree_[node]; }
  int v2v_degree(int node) const { return v2v_degree_[node]; }
  std::optional<int> find_link(int a, int b) const;
  std::size_t v2v_count() const;
  std::size_t v2i_count() const { return links_.size() - v2v_count(); }

  LinkStrategy strategy() const;

 private:
  Topology(NetworkPtr network, std::vector<Link> links, bool);
  void index_links();

  NetworkPtr network_;
  std::vector<Link> links_;
  std::vector<int> offsets_;
  std::vector<Adjacent> adjacency_;
  std::vector<int> degree_;
  std::vector<int> v2v_degree_;
};

// ---------------------------------------------------------------------------
// Candidates, demand and key pairs

struct CandidateParams {
  double v2v_range_m = 300.0;
  double v2i_range_m = 500.0;
  double alpha = 0.7;
  double r_th = 0.7;
};

struct V2VCandidate {
  int a = 0;  // vehicle index, a < b
  int b = 0;
  double distance = 0.0;
  double score = 0.0;
  bool preferred = false;  // score >= r_th
};

struct V2ICandidate {
  int vehicle = 0;
  int rsu = 0;  // node index (>= vehicle count)
  double distance = 0.0;
};

struct CandidateLinks {
  std::vector<V2VCandidate> v2v;
  std::vector<V2ICandidate> v2i;
  std::size_t size() const { return v2v.size() + v2i.size(); }
};

/// All vehicle pairs within V2V range and all vehicle/RSU pairs within V2I
/// range, in index order.
CandidateLinks candidate_links(const Network& network, const CandidateParams& params);

/// Symmetric N x N demand intensities in [0, 1] with zero diagonal.
class DemandMatrix {
 public:
  DemandMatrix() = default;
  explicit DemandMatrix(int n) : n_(n), data_(static_cast<std::size_t>(n) * n, 0.0) {}
  int size() const { return n_; }
  double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * n_ + j]; }
  void set(int i, int j, double v) {
    data_[static_cast<std::size_t>(i) * n_ + j] = v;
    data_[static_cast<std::size_t>(j) * n_ + i] = v;
  }

 private:
  int n_ = 0;
  std::vector<double> data_;
};

struct DemandParams {
  double d0_m = 300.0;
  double alpha = 0.7;
};

/// D_ij = exp(-d_ij / d0) * (1 + R_ij) / 2 for i != j. Throws ConfigError when d0 <= 0.
DemandMatrix demand_matrix(const NetworkSnapshot& snapshot, const DemandParams& params);

struct CommPair {
  std::string source;
  std::string destination;
  int source_index = 0;  // vehicle indices, source_index < destination_index
  int destination_index = 0;
  double demand = 0.0;
};

using CommPairSet = std::vector<CommPair>;

struct KeyPairParams {
  double v2v_range_m = 300.0;
  double demand_threshold = 0.3;
};

/// Vehicle pairs farther apart than V2V range whose demand reaches the
/// threshold, ordered by (source, destination) index.
CommPairSet key_pairs(const NetworkSnapshot& snapshot, const DemandMatrix& demand, const KeyPairParams& params);

// ---------------------------------------------------------------------------
// Graph queries

/// BFS hop distances from `source` over active links; -1 when unreachable.
std::vector<int> hop_distances(const Topology& topology, int source);

/// Breadth-first shortest path; among equal-length paths each next hop is
/// the neighbour with the smallest node id. Empty optional when unreachable.
std::optional<std::vector<int>> shortest_hop_path(const Topology& topology, int src, int dst);

/// Same as above using a precomputed `hop_distances(topology, dst)`.
std::optional<std::vector<int>> shortest_hop_path(const Topology& topology, int src,
                                                  std::span<const int> distances_to_dst);

/// Id-based overload; throws LookupError for unknown ids.
std::optional<std::vector<std::string>> shortest_hop_path(const Topology& topology, const std::string& src,
                                                          const std::string& dst);

struct GraphStats {
  int diameter = 0;
  double connectivity_rate = 0.0;  // fraction of vehicle pairs joined by a path
  double link_density = 0.0;       // active links / possible V2V + V2I links
  std::vector<int> degrees;        // active incident links per node
};

GraphStats graph_stats(const Topology& topology);

/// Number of edge-disjoint paths between two nodes, capped at `limit`.
int edge_disjoint_paths(const Topology& topology, int a, int b, int limit);

/// Edge-disjoint path count over an explicit undirected edge list. When
/// `used` is given it receives the indices of edges that carry flow.
int edge_disjoint_paths(int node_count, std::span<const std::pair<int, int>> edges, int a, int b, int limit,
                        std::vector<int>* used = nullptr);

/// True iff at least `k_min` edge-disjoint paths join the pair.
bool k_path_count(const Topology& topology, int a, int b, int k_min);

}  // namespace vanet
