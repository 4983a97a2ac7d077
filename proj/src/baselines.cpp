#include "vanet/baselines.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <tuple>
#include <vector>

#include "vanet/geometry.hpp"

namespace vanet {

const char* to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::greedy:
      return "greedy";
    case BaselineKind::shortest_path:
      return "shortest_path";
    case BaselineKind::motif:
      return "motif";
  }
  return "?";
}

namespace {

struct Entry {
  int a = 0;
  int b = 0;
  LinkKind kind = LinkKind::v2v;
  double distance = 0.0;
  double score = 1.0;
  int order = 0;  // position in candidate order, V2V first
};

std::vector<Entry> entries(const CandidateLinks& c) {
  std::vector<Entry> out;
  int order = 0;
  for (const auto& v : c.v2v) out.push_back({v.a, v.b, LinkKind::v2v, v.distance, v.score, order++});
  for (const auto& v : c.v2i) out.push_back({v.vehicle, v.rsu, LinkKind::v2i, v.distance, 1.0, order++});
  return out;
}

bool greedy_less(const Entry& x, const Entry& y) {
  if (x.distance != y.distance) return x.distance < y.distance;
  if (x.score != y.score) return x.score > y.score;
  return x.order < y.order;
}

class Builder {
 public:
  Builder(const Network& net, const LinkLimits& limits)
      : net_(net), limits_(limits), used_(net.node_count(), 0) {}

  bool fits(const Entry& e) const {
    if (e.kind == LinkKind::v2v) return used_[e.a] < limits_.max_v2v_degree && used_[e.b] < limits_.max_v2v_degree;
    return used_[e.b] < limits_.max_v2i_degree;
  }

  void add(const Entry& e) {
    if (e.kind == LinkKind::v2v) {
      ++used_[e.a];
      strategy_.add_v2v(net_.id(e.a), net_.id(e.b));
    } else {
      strategy_.add_v2i(net_.id(e.a), net_.id(e.b), 0.0);
    }
    ++used_[e.b];
  }

  bool try_add(const Entry& e) {
    if (!fits(e)) return false;
    add(e);
    return true;
  }

  LinkStrategy finish() {
    allocate_equal_shares(strategy_, net_);
    return std::move(strategy_);
  }

 private:
  const Network& net_;
  const LinkLimits& limits_;
  std::vector<int> used_;
  LinkStrategy strategy_;
};

}  // namespace

LinkStrategy greedy_build(const Network& network, const CandidateLinks& candidates, const LinkLimits& limits) {
  auto list = entries(candidates);
  std::sort(list.begin(), list.end(), greedy_less);
  Builder b(network, limits);
  for (const auto& e : list) b.try_add(e);
  return b.finish();
}

LinkStrategy shortest_path_build(const Network& network, const CandidateLinks& candidates, const CommPairSet& pairs,
                                 const LinkLimits& limits) {
  const auto list = entries(candidates);
  const int n = network.node_count();
  std::vector<std::vector<int>> incident(n);
  for (int i = 0; i < static_cast<int>(list.size()); ++i) {
    incident[list[i].a].push_back(i);
    incident[list[i].b].push_back(i);
  }
  std::vector<char> active(list.size(), 0);
  std::vector<int> used(n, 0);
  auto fits = [&](const Entry& e, const std::vector<int>& u) {
    if (e.kind == LinkKind::v2v) return u[e.a] < limits.max_v2v_degree && u[e.b] < limits.max_v2v_degree;
    return u[e.b] < limits.max_v2i_degree;
  };
  auto bump = [&](const Entry& e, std::vector<int>& u) {
    if (e.kind == LinkKind::v2v) ++u[e.a];
    ++u[e.b];
  };

  using Cost = std::pair<int, double>;
  for (const auto& pair : pairs) {
    std::vector<char> banned(list.size(), 0);
    for (int attempt = 0; attempt < 8; ++attempt) {
      const int s = pair.source_index;
      const int d = pair.destination_index;
      std::vector<Cost> best(n, {std::numeric_limits<int>::max(), 0.0});
      std::vector<int> via(n, -1);
      std::priority_queue<std::pair<Cost, int>, std::vector<std::pair<Cost, int>>, std::greater<>> pq;
      best[s] = {0, 0.0};
      pq.push({best[s], s});
      while (!pq.empty()) {
        auto [c, u] = pq.top();
        pq.pop();
        if (c > best[u] || u == d) continue;
        for (int i : incident[u]) {
          const auto& e = list[i];
          if (!active[i] && (banned[i] || !fits(e, used))) continue;
          const int v = e.a == u ? e.b : e.a;
          const Cost nc{c.first + 1, c.second + (active[i] ? 0.0 : e.distance)};
          if (nc < best[v]) {
            best[v] = nc;
            via[v] = i;
            pq.push({nc, v});
          }
        }
      }
      if (via[d] < 0) break;
      std::vector<int> added;
      for (int v = d; v != s;) {
        const int i = via[v];
        if (!active[i]) added.push_back(i);
        v = list[i].a == v ? list[i].b : list[i].a;
      }
      std::vector<int> trial = used;
      int conflict = -1;
      for (auto it = added.rbegin(); it != added.rend(); ++it) {
        if (!fits(list[*it], trial)) {
          conflict = *it;
          break;
        }
        bump(list[*it], trial);
      }
      if (conflict >= 0) {
        banned[conflict] = 1;
        continue;
      }
      for (int i : added) active[i] = 1;
      used = std::move(trial);
      break;
    }
  }

  Builder b(network, limits);
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (active[i]) b.add(list[i]);
  }
  return b.finish();
}

void MotifTracker::observe(const NetworkSnapshot& snapshot) {
  std::map<std::pair<std::string, std::string>, std::size_t> next;
  const auto& vs = snapshot.vehicles;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    for (std::size_t j = i + 1; j < vs.size(); ++j) {
      const auto& a = vs[i];
      const auto& b = vs[j];
      if (distance(a.x, a.y, b.x, b.y) > params_.v2v_range_m) continue;
      if (heading_difference(a.heading, b.heading) >= params_.heading_tolerance_rad) continue;
      auto key = a.id < b.id ? std::pair{a.id, b.id} : std::pair{b.id, a.id};
      auto it = counts_.find(key);
      const std::size_t prev = it == counts_.end() ? 0 : it->second;
      next[std::move(key)] = std::min(prev + 1, params_.window);
    }
  }
  counts_ = std::move(next);
  ++steps_;
}

std::size_t MotifTracker::count(const std::string& a, const std::string& b) const {
  auto it = counts_.find(a < b ? std::pair{a, b} : std::pair{b, a});
  return it == counts_.end() ? 0 : it->second;
}

LinkStrategy motif_build(const MotifTracker& tracker, const Network& network, const CandidateLinks& candidates,
                         const LinkLimits& limits) {
  auto list = entries(candidates);
  std::vector<std::size_t> counts(list.size(), 0);
  for (const auto& e : list) {
    if (e.kind == LinkKind::v2v) counts[e.order] = tracker.count(network.id(e.a), network.id(e.b));
  }
  std::sort(list.begin(), list.end(), [&](const Entry& x, const Entry& y) {
    if (counts[x.order] != counts[y.order]) return counts[x.order] > counts[y.order];
    return greedy_less(x, y);
  });
  Builder b(network, limits);
  for (const auto& e : list) b.try_add(e);
  return b.finish();
}

}  // namespace vanet
