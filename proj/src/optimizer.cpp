#include "vanet/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <numeric>
#include <queue>
#include <set>
#include <tuple>

#include "vanet/errors.hpp"

namespace vanet {

const char* to_string(SolveMode mode) { return mode == SolveMode::exact ? "exact" : "heuristic"; }

double complexity(int vehicle_count, double link_density, const SolverParams& params) {
  return params.xi * vehicle_count + params.zeta * link_density;
}

double complexity(const NetworkSnapshot& snapshot, const GraphStats& stats, const SolverParams& params) {
  return complexity(static_cast<int>(snapshot.vehicles.size()), stats.link_density, params);
}

SolveMode select_mode(int vehicle_count, double link_density, const SolverParams& params) {
  const double q = complexity(vehicle_count, link_density, params);
  return q < params.q0 && vehicle_count <= params.exact_max_vehicles ? SolveMode::exact : SolveMode::heuristic;
}

OptimizationProblem make_problem(NetworkPtr network, const CandidateLinks& candidates, const CommPairSet& pairs,
                                 const FeatureMatrix* fused, const RegulationState& regulation,
                                 const LinkLimits& limits, const MetricParams& metrics, const SolverParams& solver) {
  OptimizationProblem p{std::move(network), candidates, pairs, {}, regulation, limits, metrics, solver};
  if (fused) {
    if (static_cast<int>(fused->size()) != p.network->node_count()) {
      throw ShapeError("fused feature matrix has " + std::to_string(fused->size()) + " rows for " +
                       std::to_string(p.network->node_count()) + " nodes");
    }
    for (const auto& row : fused->rows) p.fused_demand.push_back(row[kFeatDemand]);
  }
  return p;
}

namespace {

// ---------------------------------------------------------------------------
// Candidate pool shared by the solvers

struct Pool {
  std::vector<Link> links;  // V2V candidates then V2I, allocated_mbps unset
  std::vector<double> distance;
  std::vector<std::vector<std::pair<int, int>>> incident;  // node -> (other node, pool index)

  int find(int a, int b) const {
    for (auto [other, i] : incident[a]) {
      if (other == b) return i;
    }
    return -1;
  }
};

Pool make_pool(const OptimizationProblem& p) {
  Pool pool;
  const int n = p.network->node_count();
  pool.incident.resize(n);
  for (const auto& c : p.candidates.v2v) {
    pool.links.push_back({c.a, c.b, LinkKind::v2v, 0.0});
    pool.distance.push_back(c.distance);
  }
  for (const auto& c : p.candidates.v2i) {
    pool.links.push_back({c.vehicle, c.rsu, LinkKind::v2i, 0.0});
    pool.distance.push_back(c.distance);
  }
  for (int i = 0; i < static_cast<int>(pool.links.size()); ++i) {
    const auto& l = pool.links[i];
    pool.incident[l.a].push_back({l.b, i});
    pool.incident[l.b].push_back({l.a, i});
  }
  return pool;
}

using Selection = std::vector<char>;

// Residual degree bookkeeping against the caps.
struct Caps {
  std::vector<int> used;  // vehicles: V2V degree, RSUs: V2I degree
  int max_v2v = 0;
  int max_v2i = 0;
  int vehicle_count = 0;

  Caps(const OptimizationProblem& p)
      : used(p.network->node_count(), 0),
        max_v2v(p.limits.max_v2v_degree),
        max_v2i(p.limits.max_v2i_degree),
        vehicle_count(p.network->vehicle_count()) {}

  bool fits(const Link& l) const {
    if (l.kind == LinkKind::v2v) return used[l.a] < max_v2v && used[l.b] < max_v2v;
    return used[l.b] < max_v2i;
  }
  void add(const Link& l) {
    if (l.kind == LinkKind::v2v) ++used[l.a];
    ++used[l.b];
  }
  void remove(const Link& l) {
    if (l.kind == LinkKind::v2v) --used[l.a];
    --used[l.b];
  }
};

std::vector<Link> selected_links(const OptimizationProblem& p, const Pool& pool, const Selection& sel) {
  std::vector<int> rsu_deg(p.network->node_count(), 0);
  for (std::size_t i = 0; i < sel.size(); ++i) {
    if (sel[i] && pool.links[i].kind == LinkKind::v2i) ++rsu_deg[pool.links[i].b];
  }
  std::vector<Link> out;
  for (std::size_t i = 0; i < sel.size(); ++i) {
    if (!sel[i]) continue;
    Link l = pool.links[i];
    if (l.kind == LinkKind::v2i) l.allocated_mbps = p.network->rsu(l.b).bandwidth_capacity / rsu_deg[l.b];
    out.push_back(l);
  }
  return out;
}

ObjectiveValue score(const OptimizationProblem& p, const Topology& topo, PairEvaluation* eval_out = nullptr) {
  ObjectiveValue v;
  auto eval = evaluate_pairs(topo, p.pairs, p.metrics.delay, p.metrics.bandwidth);
  if (p.solver.k_min <= 1) {
    v.violations = static_cast<int>(p.pairs.size()) - eval.connected;
  } else {
    for (const auto& pair : p.pairs) {
      if (!k_path_count(topo, pair.source_index, pair.destination_index, p.solver.k_min)) ++v.violations;
    }
  }
  v.links = topo.links().size();
  v.l_avg = eval.l_avg;
  v.mean_delay_s = eval.mean_delay_s;
  v.objective = composite_objective(p.regulation, eval.l_avg, eval.mean_delay_s);
  if (eval_out) *eval_out = std::move(eval);
  return v;
}

ObjectiveValue score_selection(const OptimizationProblem& p, const Pool& pool, const Selection& sel) {
  return score(p, Topology::from_links(p.network, selected_links(p, pool, sel)));
}

// (violations, objective, links); lexicographic edge order is handled by callers.
int compare_value(const ObjectiveValue& a, const ObjectiveValue& b) {
  if (a.violations != b.violations) return a.violations < b.violations ? -1 : 1;
  if (a.objective != b.objective) return a.objective < b.objective ? -1 : 1;
  if (a.links != b.links) return a.links < b.links ? -1 : 1;
  return 0;
}

// Lexicographic comparison of the sorted active index lists.
bool lex_less(const Selection& a, const Selection& b) {
  std::size_t i = 0;
  std::size_t j = 0;
  const std::size_t n = a.size();
  while (true) {
    while (i < n && !a[i]) ++i;
    while (j < n && !b[j]) ++j;
    if (i == n || j == n) return i == n && j != n;
    if (i != j) return i < j;
    ++i;
    ++j;
  }
}

bool better(const ObjectiveValue& va, const Selection& a, const ObjectiveValue& vb, const Selection& b) {
  const int c = compare_value(va, vb);
  if (c != 0) return c < 0;
  return lex_less(a, b);
}

CommPairSet unreachable_pairs(const OptimizationProblem& p, const Topology& topo) {
  CommPairSet out;
  for (const auto& pair : p.pairs) {
    if (!k_path_count(topo, pair.source_index, pair.destination_index, std::max(1, p.solver.k_min))) {
      out.push_back(pair);
    }
  }
  return out;
}

LinkStrategy to_strategy(const Network& net, const std::vector<Link>& links) {
  LinkStrategy s;
  for (const auto& l : links) {
    if (l.kind == LinkKind::v2v) {
      s.add_v2v(net.id(l.a), net.id(l.b));
    } else {
      s.add_v2i(net.id(l.a), net.id(l.b), l.allocated_mbps);
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Exact search

class ExactSearch {
 public:
  explicit ExactSearch(const OptimizationProblem& p) : p_(p), pool_(make_pool(p)), caps_(p) {
    state_.assign(pool_.links.size(), kUndecided);
  }

  ExactResult run() {
    ExactResult out;
    const std::size_t e = pool_.links.size();
    start_ = std::chrono::steady_clock::now();

    best_.assign(e, 0);
    best_value_ = score_selection(p_, pool_, best_);
    // Seed with the heuristic so pruning bites early.
    {
      const auto h = solve_heuristic(p_);
      Selection seed(e, 0);
      for (int idx : selection_indices(p_, h.strategy)) seed[idx] = 1;
      const auto v = score_selection(p_, pool_, seed);
      if (feasible(seed) && better(v, seed, best_value_, best_)) {
        best_ = seed;
        best_value_ = v;
      }
    }

    if (static_cast<int>(e) <= p_.solver.enumeration_max_links) {
      enumerate();
      out.enumerated = true;
    } else {
      Selection cur(e, 0);
      branch(0, cur);
    }
    out.optimal = !timed_out_;
    out.nodes_explored = nodes_;
    const auto links = selected_links(p_, pool_, best_);
    const auto topo = Topology::from_links(p_.network, links);
    out.value = best_value_;
    out.strategy = to_strategy(*p_.network, links);
    out.unreachable = unreachable_pairs(p_, topo);
    return out;
  }

 private:
  static constexpr char kUndecided = 0;
  static constexpr char kIn = 1;
  static constexpr char kOut = 2;

  bool feasible(const Selection& sel) const {
    Caps c(p_);
    for (std::size_t i = 0; i < sel.size(); ++i) {
      if (!sel[i]) continue;
      if (!c.fits(pool_.links[i])) return false;
      c.add(pool_.links[i]);
    }
    return true;
  }

  bool out_of_time() {
    if (timed_out_) return true;
    if ((++nodes_ & 255u) == 0) {
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
      if (elapsed > p_.solver.exact_time_budget_s) timed_out_ = true;
    }
    return timed_out_;
  }

  void consider(const Selection& sel) {
    const auto v = score_selection(p_, pool_, sel);
    if (better(v, sel, best_value_, best_)) {
      best_ = sel;
      best_value_ = v;
    }
  }

  void enumerate() {
    const std::size_t e = pool_.links.size();
    Selection sel(e, 0);
    const std::uint64_t total = std::uint64_t{1} << e;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      if (out_of_time()) return;
      for (std::size_t i = 0; i < e; ++i) sel[i] = (mask >> i) & 1u;
      if (!feasible(sel)) continue;
      consider(sel);
    }
  }

  // Optimistic bound over all completions of the current partial assignment.
  bool prune(std::size_t depth) {
    const auto& net = *p_.network;
    const int n = net.node_count();
    std::vector<int> inc_deg(n, 0);
    std::vector<int> inc_v2v(n, 0);
    std::vector<int> inc_rsu(n, 0);
    std::vector<int> opt;
    for (std::size_t i = 0; i < pool_.links.size(); ++i) {
      const auto& l = pool_.links[i];
      if (state_[i] == kIn) {
        ++inc_deg[l.a];
        ++inc_deg[l.b];
        if (l.kind == LinkKind::v2v) {
          ++inc_v2v[l.a];
          ++inc_v2v[l.b];
        } else {
          ++inc_rsu[l.b];
        }
        opt.push_back(static_cast<int>(i));
      } else if (state_[i] == kUndecided && i >= depth && caps_.fits(l)) {
        opt.push_back(static_cast<int>(i));
      }
    }

    std::vector<std::vector<std::pair<int, int>>> adj(n);
    std::vector<std::pair<int, int>> edges;
    for (int i : opt) {
      const auto& l = pool_.links[i];
      adj[l.a].push_back({l.b, i});
      adj[l.b].push_back({l.a, i});
      edges.push_back({l.a, l.b});
    }

    const auto& dp = p_.metrics.delay;
    const double base = p_.metrics.bandwidth.v2v_base_mbps;
    auto edge_cost = [&](int i) {
      const auto& l = pool_.links[i];
      const int extra = state_[i] == kIn ? 0 : 1;
      double mbps;
      if (l.kind == LinkKind::v2v) {
        mbps = base / std::max({inc_v2v[l.a] + extra, inc_v2v[l.b] + extra, 1});
      } else {
        mbps = net.rsu(l.b).bandwidth_capacity / std::max(inc_rsu[l.b] + extra, 1);
      }
      return dp.packet_bits / (mbps * 1e6);
    };
    auto node_cost = [&](int u, bool source) {
      const int floor_deg = source ? 1 : 2;
      if (net.is_rsu(u)) return dp.k_i * std::max(inc_deg[u], floor_deg) * dp.tau_i_s;
      return dp.k_v * std::max(inc_deg[u], floor_deg) * dp.tau_v_s;
    };

    int violations = 0;
    int connected = 0;
    double hop_sum = 0.0;
    double delay_sum = 0.0;
    std::vector<int> hops(n);
    std::vector<double> cost(n);
    for (const auto& pair : p_.pairs) {
      const int s = pair.source_index;
      const int d = pair.destination_index;
      std::fill(hops.begin(), hops.end(), -1);
      std::queue<int> q;
      hops[s] = 0;
      q.push(s);
      while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (auto [v, i] : adj[u]) {
          if (hops[v] < 0) {
            hops[v] = hops[u] + 1;
            q.push(v);
          }
        }
      }
      bool ok = hops[d] >= 0;
      if (ok && p_.solver.k_min > 1) ok = edge_disjoint_paths(n, edges, s, d, p_.solver.k_min) >= p_.solver.k_min;
      if (!ok) {
        ++violations;
        if (hops[d] < 0) continue;
      }
      if (p_.solver.k_min > 1) continue;
      ++connected;
      hop_sum += hops[d];
      // Dijkstra on lower-bounded node and link delays.
      std::fill(cost.begin(), cost.end(), std::numeric_limits<double>::infinity());
      using Item = std::pair<double, int>;
      std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
      cost[s] = 0.0;
      pq.push({0.0, s});
      while (!pq.empty()) {
        auto [c, u] = pq.top();
        pq.pop();
        if (c > cost[u]) continue;
        if (u == d) break;
        const double leave = c + node_cost(u, u == s);
        for (auto [v, i] : adj[u]) {
          const double nc = leave + edge_cost(i);
          if (nc < cost[v]) {
            cost[v] = nc;
            pq.push({nc, v});
          }
        }
      }
      delay_sum += cost[d];
    }

    if (violations > best_value_.violations) return true;
    if (violations < best_value_.violations || p_.solver.k_min > 1 || connected == 0) return false;
    const double bound = composite_objective(p_.regulation, hop_sum / connected, delay_sum / connected);
    return bound > best_value_.objective * (1.0 + 1e-9) + 1e-15;
  }

  void branch(std::size_t depth, Selection& cur) {
    if (out_of_time()) return;
    if (depth == pool_.links.size()) {
      consider(cur);
      return;
    }
    if (prune(depth)) return;
    const Link& l = pool_.links[depth];
    if (caps_.fits(l)) {
      state_[depth] = kIn;
      cur[depth] = 1;
      caps_.add(l);
      branch(depth + 1, cur);
      caps_.remove(l);
      cur[depth] = 0;
    }
    state_[depth] = kOut;
    branch(depth + 1, cur);
    state_[depth] = kUndecided;
  }

  const OptimizationProblem& p_;
  Pool pool_;
  Caps caps_;
  std::vector<char> state_;
  Selection best_;
  ObjectiveValue best_value_;
  std::size_t nodes_ = 0;
  bool timed_out_ = false;
  std::chrono::steady_clock::time_point start_;
};

// ---------------------------------------------------------------------------
// Routing over the candidate graph

// Cheapest route by (hops, new links, utility penalty) using active links or
// pool links that still fit the caps. Returns pool indices of the new links,
// or nullopt when no route exists.
std::optional<std::vector<int>> route(const Pool& pool, const Selection& active, const Caps& caps,
                                      const std::vector<double>& utility, const std::vector<char>& banned, int s,
                                      int d) {
  const int n = static_cast<int>(pool.incident.size());
  using Cost = std::tuple<int, int, double>;
  std::vector<Cost> best(n, Cost{std::numeric_limits<int>::max(), 0, 0.0});
  std::vector<int> via(n, -1);
  using Item = std::pair<Cost, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  best[s] = Cost{0, 0, 0.0};
  pq.push({best[s], s});
  while (!pq.empty()) {
    auto [c, u] = pq.top();
    pq.pop();
    if (c > best[u]) continue;
    if (u == d) break;
    for (auto [v, i] : pool.incident[u]) {
      const bool is_active = active[i];
      if (!is_active && (banned[i] || !caps.fits(pool.links[i]))) continue;
      Cost nc{std::get<0>(c) + 1, std::get<1>(c) + (is_active ? 0 : 1),
              std::get<2>(c) + (is_active ? 0.0 : 1.0 - utility[i])};
      if (nc < best[v]) {
        best[v] = nc;
        via[v] = i;
        pq.push({nc, v});
      }
    }
  }
  if (via[d] < 0 && s != d) return std::nullopt;
  std::vector<int> added;
  for (int v = d; v != s;) {
    const int i = via[v];
    if (!active[i]) added.push_back(i);
    const auto& l = pool.links[i];
    v = l.a == v ? l.b : l.a;
  }
  std::reverse(added.begin(), added.end());
  return added;
}

// Activates the new links of a route if all of them fit the caps together;
// otherwise returns the first link that does not fit.
int commit(const Pool& pool, Selection& active, Caps& caps, const std::vector<int>& added) {
  Caps trial = caps;
  for (int i : added) {
    if (!trial.fits(pool.links[i])) return i;
    trial.add(pool.links[i]);
  }
  for (int i : added) active[i] = 1;
  caps = std::move(trial);
  return -1;
}

// Connects s and d through the pool, retrying around cap conflicts. Returns
// the number of links added (0 when none was needed or possible).
int connect_pair(const Pool& pool, Selection& active, Caps& caps, const std::vector<double>& utility,
                 std::vector<char> banned, int s, int d) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    auto r = route(pool, active, caps, utility, banned, s, d);
    if (!r) return 0;
    const int conflict = commit(pool, active, caps, *r);
    if (conflict < 0) return static_cast<int>(r->size());
    banned[conflict] = 1;
  }
  return 0;
}

std::vector<std::pair<int, int>> active_edges(const Pool& pool, const Selection& active, std::vector<int>* index) {
  std::vector<std::pair<int, int>> edges;
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (!active[i]) continue;
    edges.push_back({pool.links[i].a, pool.links[i].b});
    if (index) index->push_back(static_cast<int>(i));
  }
  return edges;
}

int disjoint_count(const Pool& pool, const Selection& active, int s, int d, int limit) {
  const auto edges = active_edges(pool, active, nullptr);
  return edge_disjoint_paths(static_cast<int>(pool.incident.size()), edges, s, d, limit);
}

// Raises a pair to k_min edge-disjoint paths using max flow over active plus
// fitting pool links. Returns links added.
int augment_pair(const Pool& pool, Selection& active, Caps& caps, const std::vector<char>& banned, int s, int d,
                 int k_min) {
  std::vector<char> skip = banned;
  int added_total = 0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    if (disjoint_count(pool, active, s, d, k_min) >= k_min) return added_total;
    std::vector<int> index;
    auto edges = active_edges(pool, active, &index);
    for (std::size_t i = 0; i < active.size(); ++i) {
      if (active[i] || skip[i] || !caps.fits(pool.links[i])) continue;
      edges.push_back({pool.links[i].a, pool.links[i].b});
      index.push_back(static_cast<int>(i));
    }
    std::vector<int> used;
    edge_disjoint_paths(static_cast<int>(pool.incident.size()), edges, s, d, k_min, &used);
    std::vector<int> added;
    for (int e : used) {
      if (!active[index[e]]) added.push_back(index[e]);
    }
    std::sort(added.begin(), added.end());
    if (added.empty()) return added_total;
    const int conflict = commit(pool, active, caps, added);
    if (conflict < 0) return added_total + static_cast<int>(added.size());
    skip[conflict] = 1;
  }
  return added_total;
}

// Shortest-path structure of the current selection, used to skip
// evaluations that cannot change the objective.
struct Analysis {
  bool exact_only = false;  // k_min > 1: every change is evaluated in full
  ObjectiveValue value;
  std::vector<char> node_on_path;
  std::vector<char> link_on_path;
  std::vector<int> slot;  // node -> row of `dist`, -1 for non-endpoints
  std::vector<std::vector<int>> dist;
  std::vector<std::vector<int>> adj;
  std::vector<int> hops;  // per pair, -1 when unreachable
  std::vector<int> src_slot;
  std::vector<int> dst_slot;

  // True when the link would open a route for some pair no longer than its
  // current one (or connect it).
  bool may_shortcut(const Link& l) const {
    constexpr int kNone = std::numeric_limits<int>::max();
    for (std::size_t k = 0; k < hops.size(); ++k) {
      const auto& ds = dist[src_slot[k]];
      const auto& dd = dist[dst_slot[k]];
      auto via = [&](int x, int y) { return ds[x] >= 0 && dd[y] >= 0 ? ds[x] + 1 + dd[y] : kNone; };
      const int best = std::min(via(l.a, l.b), via(l.b, l.a));
      if (best == kNone) continue;
      if (hops[k] < 0 || best <= hops[k]) return true;
    }
    return false;
  }

  void add_edge(const Link& l) {
    adj[l.a].push_back(l.b);
    adj[l.b].push_back(l.a);
    for (auto& d : dist) {
      relax(d, l.a, l.b);
      relax(d, l.b, l.a);
    }
  }

 private:
  void relax(std::vector<int>& d, int x, int y) {
    if (d[x] < 0 || (d[y] >= 0 && d[y] <= d[x] + 1)) return;
    d[y] = d[x] + 1;
    std::queue<int> q;
    q.push(y);
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (int w : adj[v]) {
        if (d[w] < 0 || d[w] > d[v] + 1) {
          d[w] = d[v] + 1;
          q.push(w);
        }
      }
    }
  }
};

Analysis analyze(const OptimizationProblem& p, const Pool& pool, const Selection& active) {
  Analysis an;
  an.exact_only = p.solver.k_min > 1;
  const auto topo = Topology::from_links(p.network, selected_links(p, pool, active));
  const int n = static_cast<int>(pool.incident.size());
  an.node_on_path.assign(n, 0);
  an.link_on_path.assign(pool.links.size(), 0);
  an.adj.assign(n, {});
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (!active[i]) continue;
    an.adj[pool.links[i].a].push_back(pool.links[i].b);
    an.adj[pool.links[i].b].push_back(pool.links[i].a);
  }
  an.slot.assign(n, -1);
  auto slot_of = [&](int node) {
    if (an.slot[node] < 0) {
      an.slot[node] = static_cast<int>(an.dist.size());
      an.dist.push_back(hop_distances(topo, node));
    }
    return an.slot[node];
  };
  int connected = 0;
  double hop_sum = 0.0;
  double delay_sum = 0.0;
  for (const auto& pair : p.pairs) {
    const int s = pair.source_index;
    const int d = pair.destination_index;
    an.src_slot.push_back(slot_of(s));
    an.dst_slot.push_back(slot_of(d));
    const auto& dd = an.dist[an.dst_slot.back()];
    an.hops.push_back(dd[s]);
    if (dd[s] < 0) continue;
    const auto path = shortest_hop_path(topo, s, dd);
    for (std::size_t k = 0; k < path->size(); ++k) {
      an.node_on_path[(*path)[k]] = 1;
      if (k + 1 < path->size()) an.link_on_path[pool.find((*path)[k], (*path)[k + 1])] = 1;
    }
    ++connected;
    hop_sum += static_cast<double>(path->size() - 1);
    delay_sum += path_delay(topo, *path, p.metrics.delay, p.metrics.bandwidth);
  }
  if (an.exact_only) {
    an.value = score(p, topo);
    return an;
  }
  an.value.violations = static_cast<int>(p.pairs.size()) - connected;
  an.value.links = topo.links().size();
  if (connected > 0) {
    an.value.l_avg = hop_sum / connected;
    an.value.mean_delay_s = delay_sum / connected;
  }
  an.value.objective = composite_objective(p.regulation, an.value.l_avg, an.value.mean_delay_s);
  return an;
}

bool pair_satisfied(const Pool& pool, const Selection& active, const Analysis& an, int s, int d, int k_min) {
  if (k_min <= 1) return an.dist[an.slot[d]][s] >= 0;
  return disjoint_count(pool, active, s, d, k_min) >= k_min;
}

std::vector<double> utilities(const OptimizationProblem& p, const Pool& pool) {
  double max_demand = 0.0;
  for (double d : p.fused_demand) max_demand = std::max(max_demand, d);
  const auto& sp = p.solver;
  std::vector<double> u(pool.links.size());
  for (std::size_t i = 0; i < pool.links.size(); ++i) {
    const auto& l = pool.links[i];
    double adaptability = 1.0;  // RSUs are static
    double range = p.limits.v2i_range_m;
    if (l.kind == LinkKind::v2v) {
      adaptability = p.candidates.v2v[i].score;
      range = p.limits.v2v_range_m;
    }
    double demand = 0.0;
    if (max_demand > 0.0) demand = 0.5 * (p.fused_demand[l.a] + p.fused_demand[l.b]) / max_demand;
    const double closeness = range > 0.0 ? 1.0 - pool.distance[i] / range : 0.0;
    u[i] = sp.utility_adaptability * adaptability + sp.utility_demand * demand + sp.utility_distance * closeness;
  }
  return u;
}

std::vector<int> utility_order(const std::vector<double>& u) {
  std::vector<int> order(u.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return u[a] > u[b]; });
  return order;
}

}  // namespace

// ---------------------------------------------------------------------------

ObjectiveValue evaluate_strategy(const OptimizationProblem& problem, const LinkStrategy& strategy) {
  return score(problem, Topology(problem.network, strategy, problem.limits));
}

LinkStrategy strategy_from_selection(const OptimizationProblem& problem, const std::vector<bool>& selected) {
  const auto pool = make_pool(problem);
  if (selected.size() != pool.links.size()) throw ShapeError("selection size does not match the candidate pool");
  Selection sel(selected.begin(), selected.end());
  return to_strategy(*problem.network, selected_links(problem, pool, sel));
}

std::vector<int> selection_indices(const OptimizationProblem& problem, const LinkStrategy& strategy) {
  const auto& net = *problem.network;
  std::vector<int> out;
  const int nv2v = static_cast<int>(problem.candidates.v2v.size());
  for (int i = 0; i < nv2v; ++i) {
    const auto& c = problem.candidates.v2v[i];
    if (strategy.v2v.count({net.id(c.a), net.id(c.b)}) || strategy.v2v.count({net.id(c.b), net.id(c.a)})) {
      out.push_back(i);
    }
  }
  for (int i = 0; i < static_cast<int>(problem.candidates.v2i.size()); ++i) {
    const auto& c = problem.candidates.v2i[i];
    if (strategy.v2i.count({net.id(c.vehicle), net.id(c.rsu)})) out.push_back(nv2v + i);
  }
  return out;
}

std::vector<double> link_utilities(const OptimizationProblem& problem) {
  return utilities(problem, make_pool(problem));
}

ExactResult solve_exact(const OptimizationProblem& problem) { return ExactSearch(problem).run(); }

HeuristicResult solve_heuristic(const OptimizationProblem& p) {
  const auto pool = make_pool(p);
  const std::size_t e = pool.links.size();
  const auto u = utilities(p, pool);
  const auto order = utility_order(u);
  Selection active(e, 0);
  Caps caps(p);
  const std::vector<char> none(e, 0);
  const int k_min = std::max(1, p.solver.k_min);

  // Route key pairs, most demanding first.
  std::vector<int> pair_order(p.pairs.size());
  std::iota(pair_order.begin(), pair_order.end(), 0);
  std::stable_sort(pair_order.begin(), pair_order.end(),
                   [&](int a, int b) { return p.pairs[a].demand > p.pairs[b].demand; });
  for (int idx : pair_order) {
    const auto& pair = p.pairs[idx];
    connect_pair(pool, active, caps, u, none, pair.source_index, pair.destination_index);
    if (k_min > 1) augment_pair(pool, active, caps, none, pair.source_index, pair.destination_index, k_min);
  }

  Analysis an = analyze(p, pool, active);
  auto try_flip = [&](int i, bool neutral_ok) {
    active[i] = active[i] ? 0 : 1;
    const auto v = score_selection(p, pool, active);
    const bool accept = v.violations < an.value.violations ||
                        (v.violations == an.value.violations &&
                         (v.objective < an.value.objective || (neutral_ok && v.objective == an.value.objective)));
    active[i] = active[i] ? 0 : 1;
    return accept;
  };
  auto flip = [&](int i) {
    if (active[i]) {
      active[i] = 0;
      caps.remove(pool.links[i]);
    } else {
      active[i] = 1;
      caps.add(pool.links[i]);
    }
  };

  for (int pass = 0; pass < 3; ++pass) {
    bool changed = false;
    // Links off every key path never shorten a route; dropping them only
    // lowers degrees along the paths.
    if (!an.exact_only) {
      for (std::size_t i = 0; i < e; ++i) {
        if (active[i] && !an.link_on_path[i]) {
          flip(static_cast<int>(i));
          changed = true;
        }
      }
      if (changed) an = analyze(p, pool, active);
    }
    // Drop path links that do not pay for themselves, least useful first.
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      if (!active[*it]) continue;
      if (try_flip(*it, true)) {
        flip(*it);
        an = analyze(p, pool, active);
        changed = true;
      }
    }
    // Add links that strictly improve the objective. Only a link opening a
    // route no longer than a pair's current one can do so.
    for (int i : order) {
      if (active[i] || !caps.fits(pool.links[i])) continue;
      if (!an.exact_only && !an.may_shortcut(pool.links[i])) continue;
      if (try_flip(i, false)) {
        flip(i);
        an = analyze(p, pool, active);
        changed = true;
      }
    }
    if (!changed) break;
  }

  // V2I relay repair for pairs still short of k_min paths.
  const auto& net = *p.network;
  for (const auto& pair : p.pairs) {
    const int s = pair.source_index;
    const int d = pair.destination_index;
    if (pair_satisfied(pool, active, an, s, d, k_min)) continue;
    int best_rsu = -1;
    ObjectiveValue best_value;
    std::pair<int, int> best_links{-1, -1};
    for (int r = net.vehicle_count(); r < net.node_count(); ++r) {
      int ls = -1;
      int ld = -1;
      for (auto [other, i] : pool.incident[r]) {
        if (other == s) ls = i;
        if (other == d) ld = i;
      }
      if (ls < 0 || ld < 0) continue;
      Caps trial = caps;
      Selection sel = active;
      bool ok = true;
      for (int i : {ls, ld}) {
        if (sel[i]) continue;
        if (!trial.fits(pool.links[i])) {
          ok = false;
          break;
        }
        trial.add(pool.links[i]);
        sel[i] = 1;
      }
      if (!ok) continue;
      const auto v = score_selection(p, pool, sel);
      if (best_rsu < 0 || compare_value(v, best_value) < 0) {
        best_rsu = r;
        best_value = v;
        best_links = {ls, ld};
      }
    }
    if (best_rsu >= 0 && best_value.violations < an.value.violations) {
      for (int i : {best_links.first, best_links.second}) {
        if (!active[i]) flip(i);
      }
      an = analyze(p, pool, active);
    }
  }
  // Anything still short: general augmentation through the pool.
  for (const auto& pair : p.pairs) {
    if (pair_satisfied(pool, active, an, pair.source_index, pair.destination_index, k_min)) continue;
    Selection before = active;
    Caps caps_before = caps;
    if (k_min == 1) {
      connect_pair(pool, active, caps, u, none, pair.source_index, pair.destination_index);
    } else {
      augment_pair(pool, active, caps, none, pair.source_index, pair.destination_index, k_min);
    }
    const auto v = score_selection(p, pool, active);
    if (v.violations < an.value.violations) {
      an = analyze(p, pool, active);
    } else {
      active = std::move(before);
      caps = std::move(caps_before);
    }
  }

  // Fill spare capacity with links that leave the objective unchanged.
  if (an.exact_only) {
    for (int i : order) {
      if (active[i] || !caps.fits(pool.links[i])) continue;
      if (try_flip(i, true)) {
        flip(i);
        an.value = score_selection(p, pool, active);
      }
    }
  } else {
    for (int i : order) {
      const auto& l = pool.links[i];
      if (active[i] || !caps.fits(l)) continue;
      if (an.node_on_path[l.a] || an.node_on_path[l.b] || an.may_shortcut(l)) continue;
      flip(i);
      an.add_edge(l);
    }
  }

  HeuristicResult out;
  const auto links = selected_links(p, pool, active);
  const auto topo = Topology::from_links(p.network, links);
  out.strategy = to_strategy(net, links);
  out.value = score(p, topo);
  out.unreachable = unreachable_pairs(p, topo);
  return out;
}

// ---------------------------------------------------------------------------
// Lifetime and verification

namespace {

int lifetime_cycles(double rx, double ry, double vx, double vy, double range_m, double step_s, int horizon) {
  const double c = rx * rx + ry * ry - range_m * range_m;
  if (c > 0.0) return 0;
  const double a = vx * vx + vy * vy;
  if (a < 1e-12) return kLifetimeUnbounded;
  const double b = 2.0 * (rx * vx + ry * vy);
  const double t = (-b + std::sqrt(b * b - 4.0 * a * c)) / (2.0 * a);
  if (!(step_s > 0.0)) throw ConfigError("step length must be positive");
  const double cycles = std::floor(t / step_s);
  if (cycles > horizon) return kLifetimeUnbounded;
  return static_cast<int>(cycles);
}

}  // namespace

int predict_link_lifetime(const VehicleState& a, const VehicleState& b, double range_m, double step_s,
                          int horizon_cycles) {
  const double vx = b.speed * std::cos(b.heading) - a.speed * std::cos(a.heading);
  const double vy = b.speed * std::sin(b.heading) - a.speed * std::sin(a.heading);
  return lifetime_cycles(b.x - a.x, b.y - a.y, vx, vy, range_m, step_s, horizon_cycles);
}

int predict_link_lifetime(const VehicleState& vehicle, const RsuNode& rsu, double range_m, double step_s,
                          int horizon_cycles) {
  const double vx = vehicle.speed * std::cos(vehicle.heading);
  const double vy = vehicle.speed * std::sin(vehicle.heading);
  return lifetime_cycles(vehicle.x - rsu.x, vehicle.y - rsu.y, vx, vy, range_m, step_s, horizon_cycles);
}

VerifyResult verify(const LinkStrategy& candidate, const OptimizationProblem& p) {
  VerifyResult r;
  r.strategy = candidate;
  const auto& net = *p.network;
  const auto& limits = p.limits;

  // Step 1: constraints. Structural and bandwidth faults are unrepairable.
  if (auto v = check_constraints(net, candidate, limits)) {
    const auto& name = v->constraint();
    if (name == "unknown_node" || name == "self_link" || name == "bandwidth_key") {
      r.reason = name;
      return r;
    }
  }
  {
    std::map<std::string, double> sums;
    for (const auto& [key, mbps] : candidate.v2i_bandwidth) sums[key.second] += mbps;
    for (const auto& [rsu, sum] : sums) {
      if (sum > net.rsu(net.index_of(rsu)).bandwidth_capacity * (1.0 + 1e-12)) {
        r.reason = "bandwidth";
        return r;
      }
    }
  }

  struct Active {
    int a;
    int b;
    LinkKind kind;
    double mbps;
    bool alive = true;
  };
  std::vector<Active> links;
  for (const auto& [a, b] : candidate.v2v) links.push_back({net.index_of(a), net.index_of(b), LinkKind::v2v, 0.0});
  for (const auto& key : candidate.v2i) {
    links.push_back({net.index_of(key.first), net.index_of(key.second), LinkKind::v2i, candidate.v2i_bandwidth.at(key)});
  }
  std::set<std::pair<int, int>> frozen;
  auto freeze = [&](Active& l) {
    l.alive = false;
    frozen.insert({std::min(l.a, l.b), std::max(l.a, l.b)});
    r.removed.push_back(net.id(l.a) + "-" + net.id(l.b));
  };

  for (auto& l : links) {
    const double range = l.kind == LinkKind::v2v ? limits.v2v_range_m : limits.v2i_range_m;
    if (net.distance(l.a, l.b) > range) freeze(l);
  }
  // Degree overflow: shed the longest links at the offending node.
  const int n = net.node_count();
  for (int node = 0; node < n; ++node) {
    const bool rsu = net.is_rsu(node);
    const int cap = rsu ? limits.max_v2i_degree : limits.max_v2v_degree;
    std::vector<Active*> mine;
    for (auto& l : links) {
      if (!l.alive) continue;
      if (rsu ? (l.kind == LinkKind::v2i && l.b == node)
              : (l.kind == LinkKind::v2v && (l.a == node || l.b == node))) {
        mine.push_back(&l);
      }
    }
    if (static_cast<int>(mine.size()) <= cap) continue;
    std::stable_sort(mine.begin(), mine.end(), [&](const Active* x, const Active* y) {
      return net.distance(x->a, x->b) > net.distance(y->a, y->b);
    });
    for (std::size_t i = 0; i + cap < mine.size(); ++i) freeze(*mine[i]);
  }

  // Step 2: lifetime pruning.
  const double step_s = net.snapshot().step_s;
  auto lifetime = [&](int a, int b, LinkKind kind) {
    if (kind == LinkKind::v2v) {
      return predict_link_lifetime(net.vehicle(a), net.vehicle(b), limits.v2v_range_m, step_s,
                                   p.solver.lifetime_horizon_cycles);
    }
    return predict_link_lifetime(net.vehicle(a), net.rsu(b), limits.v2i_range_m, step_s,
                                 p.solver.lifetime_horizon_cycles);
  };
  for (auto& l : links) {
    if (l.alive && lifetime(l.a, l.b, l.kind) < p.solver.lifetime_min_cycles) freeze(l);
  }

  // Step 3: supplement key pairs short of k_min paths from the pool.
  const auto pool = make_pool(p);
  const std::size_t e = pool.links.size();
  Selection active(e, 0);
  std::vector<char> banned(e, 0);
  Caps caps(p);
  std::map<std::pair<int, int>, int> pool_index;
  for (std::size_t i = 0; i < e; ++i) {
    const auto& l = pool.links[i];
    pool_index[{l.a, l.b}] = static_cast<int>(i);
    if (frozen.count({std::min(l.a, l.b), std::max(l.a, l.b)}) ||
        lifetime(l.a, l.b, l.kind) < p.solver.lifetime_min_cycles) {
      banned[i] = 1;
    }
  }
  // Surviving links that are not in the pool still count for connectivity.
  Pool extended = pool;
  for (auto& l : links) {
    if (!l.alive) continue;
    auto it = pool_index.find({l.a, l.b});
    int idx;
    if (it == pool_index.end()) {
      idx = static_cast<int>(extended.links.size());
      extended.links.push_back({l.a, l.b, l.kind, 0.0});
      extended.distance.push_back(net.distance(l.a, l.b));
      extended.incident[l.a].push_back({l.b, idx});
      extended.incident[l.b].push_back({l.a, idx});
      active.push_back(0);
      banned.push_back(1);
    } else {
      idx = it->second;
    }
    active[idx] = 1;
    caps.add(extended.links[idx]);
  }
  std::vector<double> utility = utilities(p, pool);
  utility.resize(extended.links.size(), 0.0);

  const int k_min = std::max(1, p.solver.k_min);
  const Selection before = active;
  for (const auto& pair : p.pairs) {
    const int s = pair.source_index;
    const int d = pair.destination_index;
    if (disjoint_count(extended, active, s, d, k_min) >= k_min) continue;
    if (k_min == 1) {
      connect_pair(extended, active, caps, utility, banned, s, d);
    } else {
      augment_pair(extended, active, caps, banned, s, d, k_min);
    }
    if (disjoint_count(extended, active, s, d, k_min) < k_min) r.unreachable.push_back(pair);
  }

  // Rebuild the strategy; RSUs that gained links get fresh equal shares.
  std::set<int> resplit;
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (active[i] && !before[i]) {
      ++r.supplemented;
      if (extended.links[i].kind == LinkKind::v2i) resplit.insert(extended.links[i].b);
    }
  }
  std::map<std::pair<int, int>, double> kept_mbps;
  for (const auto& l : links) {
    if (l.alive && l.kind == LinkKind::v2i) kept_mbps[{l.a, l.b}] = l.mbps;
  }
  std::vector<int> rsu_deg(n, 0);
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (active[i] && extended.links[i].kind == LinkKind::v2i) ++rsu_deg[extended.links[i].b];
  }
  LinkStrategy out;
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (!active[i]) continue;
    const auto& l = extended.links[i];
    if (l.kind == LinkKind::v2v) {
      out.add_v2v(net.id(l.a), net.id(l.b));
    } else {
      const double mbps =
          resplit.count(l.b) ? net.rsu(l.b).bandwidth_capacity / rsu_deg[l.b] : kept_mbps.at({l.a, l.b});
      out.add_v2i(net.id(l.a), net.id(l.b), mbps);
    }
  }
  if (auto v = check_constraints(net, out, limits)) {
    r.reason = v->constraint();
    return r;
  }
  r.strategy = std::move(out);
  r.pass = true;
  return r;
}

LinkStrategy carry_over(const LinkStrategy& previous, const Network& network, const LinkLimits& limits) {
  LinkStrategy out;
  for (const auto& [a, b] : previous.v2v) {
    const auto ia = network.find(a);
    const auto ib = network.find(b);
    if (!ia || !ib || network.is_rsu(*ia) || network.is_rsu(*ib)) continue;
    if (network.distance(*ia, *ib) > limits.v2v_range_m) continue;
    out.add_v2v(a, b);
  }
  for (const auto& key : previous.v2i) {
    const auto iv = network.find(key.first);
    const auto ir = network.find(key.second);
    if (!iv || !ir || network.is_rsu(*iv) || !network.is_rsu(*ir)) continue;
    if (network.distance(*iv, *ir) > limits.v2i_range_m) continue;
    auto it = previous.v2i_bandwidth.find(key);
    out.add_v2i(key.first, key.second, it == previous.v2i_bandwidth.end() ? 0.0 : it->second);
  }
  return out;
}

CandidateOutcome adjust(const LinkStrategy& current_in, const OptimizationProblem& p) {
  CandidateOutcome out;
  LinkStrategy current = current_in;
  if (check_constraints(*p.network, current, p.limits)) {
    auto fixed = verify(current, p);
    current = fixed.pass ? fixed.strategy : LinkStrategy{};
  }
  const Topology topo(p.network, current, p.limits);
  const auto eval = evaluate_pairs(topo, p.pairs, p.metrics.delay, p.metrics.bandwidth);
  out.current = {eval.l_avg, eval.mean_delay_s};
  const auto stats = graph_stats(topo);
  const int nv = p.network->vehicle_count();
  out.q = complexity(nv, stats.link_density, p.solver);
  out.mode = select_mode(nv, stats.link_density, p.solver);

  const LinkStrategy raw =
      out.mode == SolveMode::exact ? solve_exact(p).strategy : solve_heuristic(p).strategy;
  out.verification = verify(raw, p);
  out.candidate = out.verification.pass ? out.verification.strategy : raw;
  if (out.verification.pass) {
    const Topology cand(p.network, out.candidate, p.limits);
    const auto ce = evaluate_pairs(cand, p.pairs, p.metrics.delay, p.metrics.bandwidth);
    out.predicted = {ce.l_avg, ce.mean_delay_s};
    const auto rate = improvement_rate(p.regulation, out.current, out.predicted);
    out.delta = rate.delta;
    out.degenerate_baseline = rate.degenerate_baseline;
  }
  if (out.verification.pass && out.delta > p.solver.delta0) {
    out.applied = true;
    out.result = out.candidate;
    return out;
  }
  auto local = verify(current, p);
  if (local.pass) {
    out.locally_corrected = !(local.strategy == current);
    out.result = std::move(local.strategy);
  } else {
    out.result = current;
  }
  return out;
}

}  // namespace vanet
