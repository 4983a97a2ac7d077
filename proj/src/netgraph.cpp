#include "vanet/netgraph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "vanet/errors.hpp"
#include "vanet/geometry.hpp"

namespace vanet {

double link_adaptability(const VehicleState& a, const VehicleState& b, double alpha) {
  const bool a_parked = a.speed < kParkedSpeedMps;
  const bool b_parked = b.speed < kParkedSpeedMps;
  double ratio = 0.0;
  if (a_parked && b_parked) {
    ratio = 1.0;
  } else if (!a_parked && !b_parked) {
    ratio = std::min(a.speed, b.speed) / std::max(a.speed, b.speed);
  }
  return alpha * ratio + (1.0 - alpha) * std::cos(heading_difference(a.heading, b.heading));
}

// --- Network -----------------------------------------------------------------

Network::Network(NetworkSnapshot snapshot)
    : snapshot_(std::move(snapshot)), vehicle_count_(static_cast<int>(snapshot_.vehicles.size())) {
  const int n = node_count();
  xs_.resize(n);
  ys_.resize(n);
  for (int i = 0; i < n; ++i) {
    if (i < vehicle_count_) {
      xs_[i] = snapshot_.vehicles[i].x;
      ys_[i] = snapshot_.vehicles[i].y;
    } else {
      xs_[i] = snapshot_.rsus[i - vehicle_count_].x;
      ys_[i] = snapshot_.rsus[i - vehicle_count_].y;
    }
    if (!index_.emplace(id(i), i).second) throw LookupError("duplicate node id '" + id(i) + "'");
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [this](int a, int b) { return id(a) < id(b); });
  rank_.resize(n);
  for (int r = 0; r < n; ++r) rank_[order[r]] = r;
}

const std::string& Network::id(int node) const {
  return node < vehicle_count_ ? snapshot_.vehicles[node].id : snapshot_.rsus[node - vehicle_count_].id;
}

std::optional<int> Network::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Network::index_of(const std::string& id) const {
  auto found = find(id);
  if (!found) throw LookupError("unknown node id '" + id + "'");
  return *found;
}

double Network::distance(int a, int b) const { return vanet::distance(xs_[a], ys_[a], xs_[b], ys_[b]); }

// --- LinkStrategy ------------------------------------------------------------

void LinkStrategy::add_v2v(const std::string& a, const std::string& b) {
  v2v.insert(a < b ? std::pair{a, b} : std::pair{b, a});
}

void LinkStrategy::add_v2i(const std::string& vehicle, const std::string& rsu, double mbps) {
  v2i.insert({vehicle, rsu});
  v2i_bandwidth[{vehicle, rsu}] = mbps;
}

bool LinkStrategy::has_v2v(const std::string& a, const std::string& b) const {
  return v2v.count(a < b ? std::pair{a, b} : std::pair{b, a}) > 0;
}

void allocate_equal_shares(LinkStrategy& strategy, const Network& network) {
  std::map<std::string, int> per_rsu;
  for (const auto& [veh, rsu] : strategy.v2i) ++per_rsu[rsu];
  strategy.v2i_bandwidth.clear();
  for (const auto& key : strategy.v2i) {
    const auto node = network.find(key.second);
    const double capacity = node && network.is_rsu(*node) ? network.rsu(*node).bandwidth_capacity : 0.0;
    strategy.v2i_bandwidth[key] = capacity / per_rsu[key.second];
  }
}

std::optional<ConstraintViolation> check_constraints(const Network& network, const LinkStrategy& strategy,
                                                     const LinkLimits& limits) {
  const int n = network.node_count();
  std::vector<int> v2v_deg(n, 0);
  std::vector<int> v2i_deg(n, 0);
  std::vector<double> bw_sum(n, 0.0);

  auto vehicle = [&](const std::string& id) -> std::optional<int> {
    auto idx = network.find(id);
    if (!idx || network.is_rsu(*idx)) return std::nullopt;
    return idx;
  };
  auto rsu = [&](const std::string& id) -> std::optional<int> {
    auto idx = network.find(id);
    if (!idx || !network.is_rsu(*idx)) return std::nullopt;
    return idx;
  };

  for (const auto& [a, b] : strategy.v2v) {
    auto ia = vehicle(a);
    auto ib = vehicle(b);
    if (!ia || !ib) return ConstraintViolation("unknown_node", "V2V link " + a + "-" + b + " names a non-vehicle");
    if (*ia == *ib) return ConstraintViolation("self_link", "V2V link " + a + "-" + b);
  }
  for (const auto& [v, r] : strategy.v2i) {
    if (!vehicle(v) || !rsu(r)) return ConstraintViolation("unknown_node", "V2I link " + v + "-" + r);
    auto it = strategy.v2i_bandwidth.find({v, r});
    if (it == strategy.v2i_bandwidth.end() || !(it->second > 0.0)) {
      return ConstraintViolation("bandwidth_key", "V2I link " + v + "-" + r + " lacks a positive allocation");
    }
  }
  for (const auto& [key, mbps] : strategy.v2i_bandwidth) {
    if (!strategy.v2i.count(key)) {
      return ConstraintViolation("bandwidth_key", "allocation for inactive V2I link " + key.first + "-" + key.second);
    }
  }
  for (const auto& [a, b] : strategy.v2v) {
    const int ia = *network.find(a);
    const int ib = *network.find(b);
    if (network.distance(ia, ib) > limits.v2v_range_m) {
      return ConstraintViolation("v2v_range", a + "-" + b + " at " + std::to_string(network.distance(ia, ib)) + " m");
    }
    ++v2v_deg[ia];
    ++v2v_deg[ib];
  }
  for (const auto& [v, r] : strategy.v2i) {
    const int iv = *network.find(v);
    const int ir = *network.find(r);
    if (network.distance(iv, ir) > limits.v2i_range_m) {
      return ConstraintViolation("v2i_range", v + "-" + r + " at " + std::to_string(network.distance(iv, ir)) + " m");
    }
    ++v2i_deg[ir];
    bw_sum[ir] += strategy.v2i_bandwidth.at({v, r});
  }
  for (int i = 0; i < network.vehicle_count(); ++i) {
    if (v2v_deg[i] > limits.max_v2v_degree) {
      return ConstraintViolation("v2v_degree", network.id(i) + " has " + std::to_string(v2v_deg[i]) + " V2V links");
    }
  }
  for (int i = network.vehicle_count(); i < n; ++i) {
    if (v2i_deg[i] > limits.max_v2i_degree) {
      return ConstraintViolation("v2i_degree", network.id(i) + " has " + std::to_string(v2i_deg[i]) + " V2I links");
    }
  }
  for (int i = network.vehicle_count(); i < n; ++i) {
    const double cap = network.rsu(i).bandwidth_capacity;
    if (bw_sum[i] > cap * (1.0 + 1e-12)) {
      return ConstraintViolation("bandwidth", network.id(i) + " allocates " + std::to_string(bw_sum[i]) + " of " +
                                                  std::to_string(cap) + " Mbps");
    }
  }
  return std::nullopt;
}

// --- Topology ------------------------------------------------------------------

Topology::Topology(NetworkPtr network, std::vector<Link> links, bool)
    : network_(std::move(network)), links_(std::move(links)) {
  index_links();
}

Topology::Topology(NetworkPtr network, const LinkStrategy& strategy, const LinkLimits& limits)
    : network_(std::move(network)) {
  if (auto violation = check_constraints(*network_, strategy, limits)) throw *violation;
  links_.reserve(strategy.link_count());
  for (const auto& [a, b] : strategy.v2v) {
    int ia = network_->index_of(a);
    int ib = network_->index_of(b);
    if (ia > ib) std::swap(ia, ib);
    links_.push_back({ia, ib, LinkKind::v2v, 0.0});
  }
  for (const auto& key : strategy.v2i) {
    links_.push_back({network_->index_of(key.first), network_->index_of(key.second), LinkKind::v2i,
                      strategy.v2i_bandwidth.at(key)});
  }
  index_links();
}

Topology Topology::from_links(NetworkPtr network, std::vector<Link> links) {
  return Topology(std::move(network), std::move(links), true);
}

void Topology::index_links() {
  const int n = network_->node_count();
  degree_.assign(n, 0);
  v2v_degree_.assign(n, 0);
  for (const auto& l : links_) {
    ++degree_[l.a];
    ++degree_[l.b];
    if (l.kind == LinkKind::v2v) {
      ++v2v_degree_[l.a];
      ++v2v_degree_[l.b];
    }
  }
  offsets_.assign(n + 1, 0);
  for (int i = 0; i < n; ++i) offsets_[i + 1] = offsets_[i] + degree_[i];
  adjacency_.assign(offsets_[n], {});
  std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
  for (int e = 0; e < static_cast<int>(links_.size()); ++e) {
    adjacency_[fill[links_[e].a]++] = {links_[e].b, e};
    adjacency_[fill[links_[e].b]++] = {links_[e].a, e};
  }
  const Network& net = *network_;
  for (int i = 0; i < n; ++i) {
    std::sort(adjacency_.begin() + offsets_[i], adjacency_.begin() + offsets_[i + 1],
              [&net](const Adjacent& x, const Adjacent& y) { return net.rank(x.node) < net.rank(y.node); });
  }
}

std::span<const Adjacent> Topology::neighbors(int node) const {
  return {adjacency_.data() + offsets_[node], static_cast<std::size_t>(offsets_[node + 1] - offsets_[node])};
}

std::optional<int> Topology::find_link(int a, int b) const {
  for (const auto& adj : neighbors(a)) {
    if (adj.node == b) return adj.link;
  }
  return std::nullopt;
}

std::size_t Topology::v2v_count() const {
  return static_cast<std::size_t>(
      std::count_if(links_.begin(), links_.end(), [](const Link& l) { return l.kind == LinkKind::v2v; }));
}

LinkStrategy Topology::strategy() const {
  LinkStrategy s;
  for (const auto& l : links_) {
    if (l.kind == LinkKind::v2v) {
      s.add_v2v(network_->id(l.a), network_->id(l.b));
    } else {
      s.add_v2i(network_->id(l.a), network_->id(l.b), l.allocated_mbps);
    }
  }
  return s;
}

// --- Candidates / demand / key pairs -----------------------------------------

CandidateLinks candidate_links(const Network& network, const CandidateParams& params) {
  CandidateLinks out;
  const int nv = network.vehicle_count();
  for (int a = 0; a < nv; ++a) {
    for (int b = a + 1; b < nv; ++b) {
      const double d = network.distance(a, b);
      if (d > params.v2v_range_m) continue;
      const double score = link_adaptability(network.vehicle(a), network.vehicle(b), params.alpha);
      out.v2v.push_back({a, b, d, score, score >= params.r_th});
    }
  }
  for (int v = 0; v < nv; ++v) {
    for (int r = nv; r < network.node_count(); ++r) {
      const double d = network.distance(v, r);
      if (d <= params.v2i_range_m) out.v2i.push_back({v, r, d});
    }
  }
  return out;
}

DemandMatrix demand_matrix(const NetworkSnapshot& snapshot, const DemandParams& params) {
  if (!(params.d0_m > 0.0)) throw ConfigError("demand distance scale d0 must be positive");
  const int n = static_cast<int>(snapshot.vehicles.size());
  DemandMatrix d(n);
  for (int i = 0; i < n; ++i) {
    const auto& a = snapshot.vehicles[i];
    for (int j = i + 1; j < n; ++j) {
      const auto& b = snapshot.vehicles[j];
      const double dist = distance(a.x, a.y, b.x, b.y);
      const double r = link_adaptability(a, b, params.alpha);
      d.set(i, j, std::exp(-dist / params.d0_m) * (1.0 + r) / 2.0);
    }
  }
  return d;
}

CommPairSet key_pairs(const NetworkSnapshot& snapshot, const DemandMatrix& demand, const KeyPairParams& params) {
  const int n = static_cast<int>(snapshot.vehicles.size());
  if (demand.size() != n) throw ShapeError("demand matrix size does not match the vehicle count");
  CommPairSet out;
  for (int i = 0; i < n; ++i) {
    const auto& a = snapshot.vehicles[i];
    for (int j = i + 1; j < n; ++j) {
      const auto& b = snapshot.vehicles[j];
      if (distance(a.x, a.y, b.x, b.y) <= params.v2v_range_m) continue;
      if (demand(i, j) < params.demand_threshold) continue;
      out.push_back({a.id, b.id, i, j, demand(i, j)});
    }
  }
  return out;
}

// --- Graph queries -------------------------------------------------------------

std::vector<int> hop_distances(const Topology& topology, int source) {
  std::vector<int> dist(topology.network().node_count(), -1);
  std::vector<int> queue;
  queue.reserve(dist.size());
  dist[source] = 0;
  queue.push_back(source);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int u = queue[head];
    for (const auto& adj : topology.neighbors(u)) {
      if (dist[adj.node] < 0) {
        dist[adj.node] = dist[u] + 1;
        queue.push_back(adj.node);
      }
    }
  }
  return dist;
}

std::optional<std::vector<int>> shortest_hop_path(const Topology& topology, int src,
                                                  std::span<const int> distances_to_dst) {
  if (distances_to_dst[src] < 0) return std::nullopt;
  std::vector<int> path{src};
  int u = src;
  while (distances_to_dst[u] > 0) {
    // Neighbours are rank-sorted, so the first hit is the smallest id.
    for (const auto& adj : topology.neighbors(u)) {
      if (distances_to_dst[adj.node] == distances_to_dst[u] - 1) {
        u = adj.node;
        break;
      }
    }
    path.push_back(u);
  }
  return path;
}

std::optional<std::vector<int>> shortest_hop_path(const Topology& topology, int src, int dst) {
  const auto dist = hop_distances(topology, dst);
  return shortest_hop_path(topology, src, dist);
}

std::optional<std::vector<std::string>> shortest_hop_path(const Topology& topology, const std::string& src,
                                                          const std::string& dst) {
  const auto& net = topology.network();
  auto path = shortest_hop_path(topology, net.index_of(src), net.index_of(dst));
  if (!path) return std::nullopt;
  std::vector<std::string> ids;
  ids.reserve(path->size());
  for (int node : *path) ids.push_back(net.id(node));
  return ids;
}

GraphStats graph_stats(const Topology& topology) {
  const auto& net = topology.network();
  const int n = net.node_count();
  const int nv = net.vehicle_count();
  GraphStats stats;
  stats.degrees.resize(n);
  for (int i = 0; i < n; ++i) stats.degrees[i] = topology.degree(i);

  std::int64_t connected_vehicle_pairs = 0;
  for (int s = 0; s < n; ++s) {
    if (topology.degree(s) == 0) continue;
    const auto dist = hop_distances(topology, s);
    for (int t = 0; t < n; ++t) {
      if (dist[t] > stats.diameter) stats.diameter = dist[t];
      if (s < nv && t < nv && t > s && dist[t] > 0) ++connected_vehicle_pairs;
    }
  }
  const double vehicle_pairs = 0.5 * nv * (nv - 1.0);
  stats.connectivity_rate = vehicle_pairs > 0 ? connected_vehicle_pairs / vehicle_pairs : 0.0;
  const double possible = vehicle_pairs + static_cast<double>(nv) * net.rsu_count();
  stats.link_density = static_cast<double>(topology.links().size()) / std::max(1.0, possible);
  return stats;
}

int edge_disjoint_paths(int node_count, std::span<const std::pair<int, int>> edges, int a, int b, int limit,
                        std::vector<int>* used) {
  if (used) used->clear();
  if (a == b || limit <= 0) return 0;
  std::vector<std::vector<int>> incident(node_count);
  for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
    incident[edges[e].first].push_back(e);
    incident[edges[e].second].push_back(e);
  }
  // flow[e] > 0 means one unit travels first -> second.
  std::vector<int> flow(edges.size(), 0);
  int found = 0;
  std::vector<int> via(node_count);
  std::vector<int> queue;
  while (found < limit) {
    std::fill(via.begin(), via.end(), -2);
    via[a] = -1;
    queue.assign(1, a);
    for (std::size_t head = 0; head < queue.size() && via[b] == -2; ++head) {
      const int u = queue[head];
      for (int e : incident[u]) {
        const bool forward = edges[e].first == u;
        const int v = forward ? edges[e].second : edges[e].first;
        const int residual = forward ? 1 - flow[e] : 1 + flow[e];
        if (residual > 0 && via[v] == -2) {
          via[v] = e;
          queue.push_back(v);
        }
      }
    }
    if (via[b] == -2) break;
    for (int v = b; v != a;) {
      const int e = via[v];
      if (edges[e].second == v) {
        ++flow[e];
        v = edges[e].first;
      } else {
        --flow[e];
        v = edges[e].second;
      }
    }
    ++found;
  }
  if (used) {
    for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
      if (flow[e] != 0) used->push_back(e);
    }
  }
  return found;
}

int edge_disjoint_paths(const Topology& topology, int a, int b, int limit) {
  std::vector<std::pair<int, int>> edges;
  edges.reserve(topology.links().size());
  for (const auto& l : topology.links()) edges.emplace_back(l.a, l.b);
  return edge_disjoint_paths(topology.network().node_count(), edges, a, b, limit);
}

bool k_path_count(const Topology& topology, int a, int b, int k_min) {
  if (k_min <= 0) return true;
  return edge_disjoint_paths(topology, a, b, k_min) >= k_min;
}

}  // namespace vanet
