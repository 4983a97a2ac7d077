#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "vanet/netgraph.hpp"

using namespace vanet;
using fixture::vehicle;

namespace {

// Random graph over vehicles placed in one 300 m cell so every link is in range.
Topology random_topology(std::mt19937_64& rng, int n, double p, std::vector<std::pair<int, int>>& edges) {
  std::uniform_real_distribution<double> u(0.0, 200.0);
  std::vector<VehicleState> vs;
  for (int i = 0; i < n; ++i) vs.push_back(vehicle(i, u(rng), u(rng)));
  auto net = make_network(fixture::snapshot(vs));
  std::bernoulli_distribution keep(p);
  std::vector<Link> links;
  edges.clear();
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (keep(rng)) {
        links.push_back({a, b, LinkKind::v2v, 0.0});
        edges.push_back({a, b});
      }
  return Topology::from_links(net, links);
}

}  // namespace

TEST_SUITE("netgraph") {
  TEST_CASE("adaptability of a perpendicular pair with speeds 10 and 20 is 0.35") {
    const auto a = vehicle(0, 0, 0, 10.0, 0.0);
    const auto b = vehicle(1, 0, 0, 20.0, std::numbers::pi / 2.0);
    CHECK(link_adaptability(a, b, 0.7) == doctest::Approx(0.35).epsilon(1e-9));
  }

  TEST_CASE("adaptability of an opposing pair with equal speeds is 0.40") {
    const auto a = vehicle(0, 0, 0, 10.0, 0.0);
    const auto b = vehicle(1, 0, 0, 10.0, std::numbers::pi);
    CHECK(link_adaptability(a, b, 0.7) == doctest::Approx(0.40).epsilon(1e-9));
  }

  TEST_CASE("adaptability handles parked vehicles") {
    CHECK(link_adaptability(vehicle(0, 0, 0, 0.0), vehicle(1, 0, 0, 0.0), 0.7) == doctest::Approx(1.0));
    CHECK(link_adaptability(vehicle(0, 0, 0, 0.0), vehicle(1, 0, 0, 5.0), 0.7) == doctest::Approx(0.3));
  }

  TEST_CASE("five vehicles in a 300 m cluster give ten V2V candidates") {
    std::vector<VehicleState> vs;
    for (int i = 0; i < 5; ++i) vs.push_back(vehicle(i, 50.0 * i, 20.0 * (i % 2)));
    const Network net(fixture::snapshot(vs));
    const auto c = candidate_links(net, {});
    CHECK(c.v2v.size() == 10);
    CHECK(c.v2i.empty());
  }

  TEST_CASE("candidate enumeration matches brute force on random scenes") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1000.0);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<VehicleState> vs;
      for (int i = 0; i < 12; ++i) vs.push_back(vehicle(i, u(rng), u(rng)));
      const Network net(fixture::snapshot(vs, {fixture::rsu(0, 500, 500)}));
      const auto c = candidate_links(net, {});
      std::size_t v2v = 0;
      std::size_t v2i = 0;
      for (int a = 0; a < 12; ++a) {
        for (int b = a + 1; b < 12; ++b)
          if (std::hypot(vs[a].x - vs[b].x, vs[a].y - vs[b].y) <= 300.0) ++v2v;
        if (std::hypot(vs[a].x - 500.0, vs[a].y - 500.0) <= 500.0) ++v2i;
      }
      CHECK(c.v2v.size() == v2v);
      CHECK(c.v2i.size() == v2i);
    }
  }

  TEST_CASE("demand at d = d0 between identical movers is 1/e") {
    const auto snap = fixture::snapshot({vehicle(0, 0, 0), vehicle(1, 300, 0)});
    const auto d = demand_matrix(snap, {300.0, 0.7});
    CHECK(d(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
    CHECK(d(1, 0) == d(0, 1));
    CHECK(d(0, 0) == 0.0);
    CHECK_THROWS_AS(demand_matrix(snap, {0.0, 0.7}), ConfigError);
  }

  TEST_CASE("a pair 400 m apart with demand 0.5 is a key pair at threshold 0.3") {
    const auto snap = fixture::snapshot({vehicle(0, 0, 0), vehicle(1, 400, 0), vehicle(2, 100, 0)});
    DemandMatrix d(3);
    d.set(0, 1, 0.5);
    d.set(0, 2, 0.9);  // within range: never a key pair
    d.set(1, 2, 0.1);  // below threshold
    const auto pairs = key_pairs(snap, d, {300.0, 0.3});
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].source == "v00");
    CHECK(pairs[0].destination == "v01");
    CHECK(pairs[0].demand == 0.5);
    CHECK_THROWS_AS(key_pairs(snap, DemandMatrix(2), {}), ShapeError);
  }

  TEST_CASE("hop distances on random 10-node graphs equal Floyd-Warshall") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<std::pair<int, int>> edges;
      const auto topo = random_topology(rng, 10, 0.25, edges);
      const auto fw = oracle::floyd_warshall(10, edges);
      for (int s = 0; s < 10; ++s) {
        const auto d = hop_distances(topo, s);
        for (int t = 0; t < 10; ++t) {
          CHECK(d[t] == (fw[s][t] >= oracle::kInf ? -1 : fw[s][t]));
          const auto path = shortest_hop_path(topo, s, t);
          CHECK(path.has_value() == (fw[s][t] < oracle::kInf));
          if (path) CHECK(static_cast<int>(path->size()) - 1 == fw[s][t]);
        }
      }
    }
  }

  TEST_CASE("shortest path ties go to the smallest next hop") {
    const auto net = make_network(fixture::snapshot({vehicle(0, 0, 0), vehicle(1, 10, 0), vehicle(2, 20, 0),
                                                     vehicle(3, 30, 0)}));
    // 0-2-3 and 0-1-3 are both two hops.
    const auto topo = Topology::from_links(net, {{0, 2, LinkKind::v2v, 0.0},
                                                 {2, 3, LinkKind::v2v, 0.0},
                                                 {0, 1, LinkKind::v2v, 0.0},
                                                 {1, 3, LinkKind::v2v, 0.0}});
    const auto path = shortest_hop_path(topo, 0, 3);
    REQUIRE(path);
    CHECK(*path == std::vector<int>{0, 1, 3});
    CHECK_THROWS_AS(shortest_hop_path(topo, std::string("v00"), std::string("nope")), LookupError);
  }

  TEST_CASE("connectivity rate of a 12-node two-cluster graph equals pair enumeration") {
    std::vector<VehicleState> vs;
    for (int i = 0; i < 12; ++i) vs.push_back(vehicle(i, 10.0 * i, 0));
    const auto net = make_network(fixture::snapshot(vs));
    std::vector<Link> links;
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < 4; ++i) edges.push_back({i, i + 1});  // cluster of 5
    for (int i = 5; i < 10; ++i) edges.push_back({i, i + 1});  // cluster of 6, node 11 isolated
    for (auto [a, b] : edges) links.push_back({a, b, LinkKind::v2v, 0.0});
    const auto stats = graph_stats(Topology::from_links(net, links));
    CHECK(stats.connectivity_rate == doctest::Approx(oracle::connectivity_rate(12, 12, edges)).epsilon(1e-12));
    CHECK(stats.connectivity_rate == doctest::Approx((10.0 + 15.0) / 66.0));
    CHECK(stats.diameter == 5);
  }

  TEST_CASE("disconnected vehicles have zero connectivity") {
    const auto net = make_network(fixture::snapshot({vehicle(0, 0, 0), vehicle(1, 10, 0), vehicle(2, 20, 0)}));
    const auto stats = graph_stats(Topology::from_links(net, {}));
    CHECK(stats.connectivity_rate == 0.0);
    CHECK(stats.diameter == 0);
    CHECK_FALSE(k_path_count(Topology::from_links(net, {}), 0, 1, 1));
  }

  TEST_CASE("K4 has three edge-disjoint paths") {
    std::vector<VehicleState> vs;
    for (int i = 0; i < 4; ++i) vs.push_back(vehicle(i, 10.0 * i, 0));
    const auto net = make_network(fixture::snapshot(vs));
    std::vector<Link> links;
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) links.push_back({a, b, LinkKind::v2v, 0.0});
    const auto topo = Topology::from_links(net, links);
    CHECK(k_path_count(topo, 0, 3, 3));
    CHECK_FALSE(k_path_count(topo, 0, 3, 4));
    CHECK(edge_disjoint_paths(topo, 0, 3, 10) == 3);
  }

  TEST_CASE("edge-disjoint path counts equal max-flow on random graphs") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 60; ++trial) {
      std::vector<std::pair<int, int>> edges;
      const auto topo = random_topology(rng, 9, 0.35, edges);
      for (int s = 0; s < 9; ++s)
        for (int t = s + 1; t < 9; ++t) CHECK(edge_disjoint_paths(topo, s, t, 100) == oracle::max_flow(9, edges, s, t));
    }
  }

  TEST_CASE("constraint checks name the violated constraint") {
    LinkLimits limits;
    limits.max_v2v_degree = 1;
    limits.max_v2i_degree = 1;
    const Network net(fixture::snapshot({vehicle(0, 0, 0), vehicle(1, 100, 0), vehicle(2, 200, 0),
                                         vehicle(3, 900, 0)},
                                        {fixture::rsu(0, 0, 100, 50.0)}));
    auto first = [&](const LinkStrategy& s) {
      const auto v = check_constraints(net, s, limits);
      return v ? v->constraint() : std::string("ok");
    };
    LinkStrategy s;
    CHECK(first(s) == "ok");
    s.add_v2v("v00", "v01");
    CHECK(first(s) == "ok");
    s.add_v2v("v01", "v02");
    CHECK(first(s) == "v2v_degree");
    LinkStrategy far;
    far.add_v2v("v02", "v03");
    CHECK(first(far) == "v2v_range");
    LinkStrategy ghost;
    ghost.add_v2v("v00", "zz");
    CHECK(first(ghost) == "unknown_node");
    LinkStrategy bw;
    bw.add_v2i("v00", "r0", 60.0);
    CHECK(first(bw) == "bandwidth");
    LinkStrategy nokey;
    nokey.v2i.insert({"v00", "r0"});
    CHECK(first(nokey) == "bandwidth_key");
    LinkStrategy v2i_far;
    v2i_far.add_v2i("v03", "r0", 10.0);
    CHECK(first(v2i_far) == "v2i_range");
    LinkStrategy v2i_deg;
    v2i_deg.add_v2i("v00", "r0", 10.0);
    v2i_deg.add_v2i("v01", "r0", 10.0);
    CHECK(first(v2i_deg) == "v2i_degree");
    CHECK_THROWS_AS(Topology(make_network(net.snapshot()), v2i_deg, limits), ConstraintViolation);
  }

  TEST_CASE("equal shares split RSU capacity") {
    const Network net(fixture::snapshot({vehicle(0, 0, 0), vehicle(1, 10, 0)}, {fixture::rsu(0, 0, 10, 90.0)}));
    LinkStrategy s;
    s.add_v2i("v00", "r0", 1.0);
    s.add_v2i("v01", "r0", 1.0);
    allocate_equal_shares(s, net);
    CHECK(s.v2i_bandwidth.at({"v00", "r0"}) == doctest::Approx(45.0));
    CHECK(s.v2i_bandwidth.at({"v01", "r0"}) == doctest::Approx(45.0));
  }
}
