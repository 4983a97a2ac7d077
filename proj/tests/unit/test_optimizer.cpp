#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "vanet/optimizer.hpp"

using namespace vanet;
using fixture::vehicle;

namespace {

constexpr double kNorth = std::numbers::pi / 2.0;

double hops_of(const OptimizationProblem& p, const LinkStrategy& s) {
  const Topology t(p.network, s, p.limits);
  return evaluate_pairs(t, p.pairs, p.metrics.delay, p.metrics.bandwidth).l_avg;
}

}  // namespace

TEST_SUITE("optimizer") {
  TEST_CASE("complexity of 60 vehicles at density 0.2 is 0.8") {
    CHECK(complexity(60, 0.2, SolverParams{}) == doctest::Approx(0.8).epsilon(1e-9));
  }

  TEST_CASE("Q below Q0 selects exact mode once the vehicle budget allows it") {
    SolverParams lifted;
    lifted.exact_max_vehicles = 60;
    CHECK(select_mode(60, 0.2, lifted) == SolveMode::exact);
    CHECK(select_mode(60, 0.5, lifted) == SolveMode::heuristic);  // Q = 1.1
    // Default budget: 60 vehicles are beyond exhaustive search.
    CHECK(select_mode(60, 0.2, SolverParams{}) == SolveMode::heuristic);
    CHECK(select_mode(8, 0.2, SolverParams{}) == SolveMode::exact);
    CHECK(select_mode(8, 0.2, SolverParams{}) == select_mode(8, 0.2, SolverParams{}));
  }

  TEST_CASE("make_problem rejects fused features of the wrong shape") {
    const auto net = make_network(fixture::snapshot({vehicle(0, 0, 0), vehicle(1, 10, 0)}));
    FeatureMatrix fused;
    fused.rows.resize(5);
    CHECK_THROWS_AS(make_problem(net, candidate_links(*net, {}), {}, &fused, RegulationState{}, {}, {}, {}),
                    ShapeError);
  }

  TEST_CASE("four-vehicle clique with one V2V slot: exact equals the matching oracle") {
    LinkLimits limits;
    limits.max_v2v_degree = 1;
    const auto snap = fixture::snapshot({vehicle(0, 0, 0), vehicle(1, 100, 0), vehicle(2, 0, 100),
                                         vehicle(3, 100, 100)});
    const auto p = fixture::problem(snap, {{0, 3}, {1, 2}}, limits);
    REQUIRE(p.candidates.size() == 6);
    const auto exact = solve_exact(p);
    const auto oracle_best = oracle::exhaustive(p);
    CHECK(exact.optimal);
    CHECK(exact.value.violations == oracle_best.value.violations);
    CHECK(exact.value.objective == oracle_best.value.objective);
    CHECK(exact.value.links == oracle_best.value.links);
    CHECK(exact.strategy == strategy_from_selection(p, oracle_best.selection));
    CHECK(exact.value.violations == 0);
    CHECK_FALSE(oracle::check(snap, exact.strategy, limits));
  }

  TEST_CASE("six vehicles and one RSU: exact equals full enumeration, heuristic within 10%") {
    LinkLimits limits;
    limits.max_v2v_degree = 2;
    limits.max_v2i_degree = 2;
    const auto snap = fixture::snapshot({vehicle(0, 0, 0), vehicle(1, 250, 0), vehicle(2, 500, 0),
                                         vehicle(3, 750, 0), vehicle(4, 250, 200), vehicle(5, 500, 200)},
                                        {fixture::rsu(0, 375, 420)});
    RegulationState reg;
    reg.l_norm = 6.0;
    reg.t_norm_s = 0.01;
    const auto p = fixture::problem(snap, {{0, 3}, {0, 5}, {1, 3}}, limits, reg);
    INFO("pool size " << p.candidates.size());
    REQUIRE(p.candidates.size() <= 16);
    const auto exact = solve_exact(p);
    const auto oracle_best = oracle::exhaustive(p);
    CHECK(exact.value.violations == oracle_best.value.violations);
    CHECK(exact.value.objective == oracle_best.value.objective);
    CHECK(exact.strategy == strategy_from_selection(p, oracle_best.selection));

    const auto heur = solve_heuristic(p);
    CHECK_FALSE(oracle::check(snap, heur.strategy, limits));
    CHECK(heur.value.violations == exact.value.violations);
    CHECK(heur.value.objective <= 1.10 * exact.value.objective);
  }

  TEST_CASE("exact search agrees with enumeration on random small instances") {
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 25; ++trial) {
      const auto p = fixture::random_problem(rng, {.max_candidates = 12});
      const auto exact = solve_exact(p);
      const auto best = oracle::exhaustive(p);
      CHECK(exact.value.violations == best.value.violations);
      CHECK(exact.value.objective == best.value.objective);
      CHECK(exact.value.links == best.value.links);
    }
  }

  TEST_CASE("branch-and-bound and enumeration give the same answer") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 15; ++trial) {
      auto p = fixture::random_problem(rng, {.max_candidates = 14});
      p.solver.enumeration_max_links = 0;
      const auto bnb = solve_exact(p);
      p.solver.enumeration_max_links = 24;
      const auto full = solve_exact(p);
      CHECK(full.enumerated);
      CHECK(bnb.value.objective == full.value.objective);
      CHECK(bnb.strategy == full.strategy);
    }
  }

  TEST_CASE("heuristic output always satisfies the constraints") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 40; ++trial) {
      const auto p = fixture::random_problem(rng, {.max_vehicles = 20, .max_rsus = 3, .max_candidates = 200,
                                                   .width = 1500.0, .height = 800.0});
      const auto h = solve_heuristic(p);
      CHECK_FALSE(oracle::check(p.network->snapshot(), h.strategy, p.limits));
      CHECK_FALSE(check_constraints(*p.network, h.strategy, p.limits));
    }
  }

  TEST_CASE("head-on pair passing now separates out of 300 m range after 15 cycles") {
    const auto a = vehicle(0, 0, 0, 10.0, 0.0);
    const auto b = vehicle(1, 0, 0, 10.0, std::numbers::pi);
    CHECK(predict_link_lifetime(a, b, 300.0, 1.0) == 15);
  }

  TEST_CASE("lifetime edge cases") {
    CHECK(predict_link_lifetime(vehicle(0, 0, 0, 10.0, 0.0), vehicle(1, 50, 0, 10.0, 0.0), 300.0, 1.0) ==
          kLifetimeUnbounded);
    CHECK(predict_link_lifetime(vehicle(0, 0, 0), vehicle(1, 400, 0), 300.0, 1.0) == 0);
    CHECK(predict_link_lifetime(vehicle(0, 0, 0, 1.0, 0.0), fixture::rsu(0, 0, 0), 500.0, 1.0, 100) ==
          kLifetimeUnbounded);  // 500 cycles is beyond the horizon
    CHECK(predict_link_lifetime(vehicle(0, 0, 0, 10.0, 0.0), fixture::rsu(0, 0, 0), 500.0, 1.0) == 50);
  }

  TEST_CASE("verify drops a link between diverging vehicles at 1-cycle lifetime") {
    const auto snap = fixture::snapshot({vehicle(0, 0, 0, 10.0, std::numbers::pi), vehicle(1, 270, 0, 10.0, 0.0),
                                         vehicle(2, 0, 100, 10.0, 0.0), vehicle(3, 50, 100, 10.0, 0.0)});
    const auto p = fixture::problem(snap, {});
    REQUIRE(predict_link_lifetime(snap.vehicles[0], snap.vehicles[1], 300.0, 1.0) == 1);
    LinkStrategy s;
    s.add_v2v("v00", "v01");
    s.add_v2v("v02", "v03");
    const auto r = verify(s, p);
    CHECK(r.pass);
    CHECK_FALSE(r.strategy.has_v2v("v00", "v01"));
    CHECK(r.strategy.has_v2v("v02", "v03"));
    CHECK(r.removed == std::vector<std::string>{"v00-v01"});
  }

  TEST_CASE("verify passes a valid long-lived strategy unchanged") {
    const auto snap = fixture::snapshot({vehicle(0, 0, 0), vehicle(1, 100, 0)});
    const auto p = fixture::problem(snap, {});
    LinkStrategy s;
    s.add_v2v("v00", "v01");
    const auto r = verify(s, p);
    CHECK(r.pass);
    CHECK(r.strategy == s);
  }

  TEST_CASE("verify fails on RSU over-allocation") {
    const auto snap = fixture::snapshot({vehicle(0, 0, 0), vehicle(1, 100, 0)}, {fixture::rsu(0, 50, 50, 100.0)});
    const auto p = fixture::problem(snap, {});
    LinkStrategy s;
    s.add_v2i("v00", "r0", 70.0);
    s.add_v2i("v01", "r0", 70.0);
    const auto r = verify(s, p);
    CHECK_FALSE(r.pass);
    CHECK(r.reason == "bandwidth");
  }

  TEST_CASE("verify repairs degree overflow by freezing links") {
    LinkLimits limits;
    limits.max_v2v_degree = 1;
    const auto snap = fixture::snapshot({vehicle(0, 0, 0), vehicle(1, 100, 0), vehicle(2, 250, 0)});
    const auto p = fixture::problem(snap, {}, limits);
    LinkStrategy s;
    s.add_v2v("v00", "v01");
    s.add_v2v("v01", "v02");
    const auto r = verify(s, p);
    CHECK(r.pass);
    CHECK_FALSE(check_constraints(*p.network, r.strategy, limits));
    CHECK(r.strategy.has_v2v("v00", "v01"));  // the longer link goes first
  }

  TEST_CASE("adjust applies a candidate that halves path length") {
    std::vector<VehicleState> vs;
    for (int i = 0; i < 5; ++i) vs.push_back(vehicle(i, 100.0 * i, 0));
    const auto snap = fixture::snapshot(vs);
    const auto p = fixture::problem(snap, {{0, 4}});
    LinkStrategy chain;
    for (int i = 0; i < 4; ++i) chain.add_v2v(fixture::vid(i), fixture::vid(i + 1));
    const auto out = adjust(chain, p);
    CHECK(out.current.l_avg == 4.0);
    CHECK(out.predicted.l_avg == 2.0);
    CHECK(out.predicted.mean_delay_s < out.current.mean_delay_s);
    CHECK(out.delta > p.solver.delta0);
    CHECK(out.applied);
    CHECK(hops_of(p, out.result) == 2.0);
    // Applying lowers the composite objective under the same weights and norms.
    CHECK(composite_objective(p.regulation, out.predicted.l_avg, out.predicted.mean_delay_s) <
          composite_objective(p.regulation, out.current.l_avg, out.current.mean_delay_s));
  }

  TEST_CASE("adjust keeps the current topology when the candidate is no better") {
    const auto snap = fixture::snapshot({vehicle(0, 0, 0), vehicle(1, 200, 0), vehicle(2, 400, 0)});
    const auto p = fixture::problem(snap, {{0, 2}});
    LinkStrategy best;
    best.add_v2v("v00", "v01");
    best.add_v2v("v01", "v02");
    const auto out = adjust(best, p);
    CHECK(out.delta == 0.0);
    CHECK_FALSE(out.applied);
    CHECK(out.result == best);
  }

  TEST_CASE("adjust applies a lifetime-repaired candidate") {
    // v01 is the lexicographically first relay but races north; v02 is a
    // stable spare relay; the current route runs through v02 and v03.
    const auto snap = fixture::snapshot({vehicle(0, 0, 0), vehicle(1, 200, 150, 60.0, kNorth),
                                         vehicle(2, 200, -150), vehicle(3, 380, -120), vehicle(4, 400, 0)});
    const auto p = fixture::problem(snap, {{0, 4}});
    REQUIRE(predict_link_lifetime(snap.vehicles[0], snap.vehicles[1], 300.0, 1.0) < 2);
    LinkStrategy current;
    current.add_v2v("v00", "v02");
    current.add_v2v("v02", "v03");
    current.add_v2v("v03", "v04");
    const auto raw = solve_exact(p);
    REQUIRE(raw.strategy.has_v2v("v00", "v01"));
    const auto out = adjust(current, p);
    CHECK(out.verification.pass);
    CHECK_FALSE(out.verification.removed.empty());
    CHECK(out.applied);
    CHECK_FALSE(out.result.has_v2v("v00", "v01"));
    CHECK(out.result.has_v2v("v00", "v02"));
    CHECK(out.result.has_v2v("v02", "v04"));
    CHECK(hops_of(p, out.result) == 2.0);
  }

  TEST_CASE("adjust sanitises an invalid current topology") {
    LinkLimits limits;
    limits.max_v2v_degree = 1;
    const auto snap = fixture::snapshot({vehicle(0, 0, 0), vehicle(1, 100, 0), vehicle(2, 200, 0)});
    const auto p = fixture::problem(snap, {}, limits);
    LinkStrategy bad;
    bad.add_v2v("v00", "v01");
    bad.add_v2v("v01", "v02");
    const auto out = adjust(bad, p);
    CHECK_FALSE(oracle::check(snap, out.result, limits));
  }

  TEST_CASE("selection round trip") {
    std::mt19937_64 rng(8);
    const auto p = fixture::random_problem(rng);
    std::vector<bool> sel(p.candidates.size(), false);
    sel[0] = true;
    const auto s = strategy_from_selection(p, sel);
    CHECK(selection_indices(p, s) == std::vector<int>{0});
    CHECK(link_utilities(p).size() == p.candidates.size());
  }
}
