#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "vanet/config.hpp"
#include "vanet/harness.hpp"

using namespace vanet;

namespace {

ExperimentConfig small_config(int steps) {
  std::istringstream in(R"(
[scenario]
steps = )" + std::to_string(steps) + R"(
seed = 5
[mobility]
spawn_rate_per_s = 0.2
mean_trip_s = 100
[demand]
d0_m = 600
[experiment]
warmup_steps = 2
)");
  return parse_config(in);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("two-point fit has r = 1 and slope 2") {
    const std::vector<double> xs{0.5, 1.0};
    const std::vector<double> ys{4.0, 5.0};
    const auto f = fit_line(xs, ys);
    REQUIRE(f.present);
    CHECK(f.r == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(f.intercept == doctest::Approx(3.0).epsilon(1e-9));
  }

  TEST_CASE("fit needs variance in both series") {
    const std::vector<double> xs{1.0, 1.0, 1.0};
    const std::vector<double> ys{1.0, 2.0, 3.0};
    CHECK_FALSE(fit_line(xs, ys).present);
  }

  TEST_CASE("quartiles of 500 values match the sort-based oracle") {
    std::mt19937_64 rng(500);
    std::normal_distribution<double> n(4.0, 1.5);
    std::vector<double> v(500);
    for (double& x : v) x = n(rng);
    const auto d = describe(v);
    CHECK(d.q1 == doctest::Approx(oracle::quantile(v, 0.25)).epsilon(1e-12));
    CHECK(d.median == doctest::Approx(oracle::quantile(v, 0.5)).epsilon(1e-12));
    CHECK(d.q3 == doctest::Approx(oracle::quantile(v, 0.75)).epsilon(1e-12));
    CHECK(d.min == *std::min_element(v.begin(), v.end()));
    CHECK(d.max == *std::max_element(v.begin(), v.end()));
    CHECK(d.count == 500);
  }

  TEST_CASE("quantile of an empty sample is a shape error") {
    CHECK_THROWS_AS(quantile_linear({}, 0.5), ShapeError);
  }

  TEST_CASE("summaries skip the warmup") {
    std::vector<MetricsRecord> rs(10);
    for (int i = 0; i < 10; ++i) {
      rs[i].l_avg = i < 3 ? 100.0 : 2.0;
      rs[i].connectivity_rate = 0.1 * i;
    }
    const auto s = summarize(rs, 3);
    CHECK(s.records == 10);
    CHECK(s.l_avg.count == 7);
    CHECK(s.l_avg.median == 2.0);
  }

  TEST_CASE("config parser rejects unknown keys, duplicates and bad values") {
    std::istringstream unknown("[scenario]\nstepz = 4\n");
    CHECK_THROWS_AS(parse_config(unknown), ConfigError);
    std::istringstream section("[nope]\nx = 1\n");
    CHECK_THROWS_AS(parse_config(section), ConfigError);
    std::istringstream dup("[scenario]\nsteps = 4\nsteps = 5\n");
    CHECK_THROWS_AS(parse_config(dup), ConfigError);
    std::istringstream bad("[scenario]\nsteps = many\n");
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    std::istringstream range("[links]\nalpha = 2\n");
    CHECK_THROWS_AS(parse_config(range), ConfigError);
    std::istringstream alg("[experiment]\nalgorithm = magic\n");
    CHECK_THROWS_AS(parse_config(alg), ConfigError);
    std::istringstream junk("just words\n");
    CHECK_THROWS_AS(parse_config(junk), ConfigError);
  }

  TEST_CASE("config defaults follow the reference parameters") {
    std::istringstream empty("");
    const auto c = parse_config(empty);
    CHECK(c.limits.v2v_range_m == 300.0);
    CHECK(c.limits.v2i_range_m == 500.0);
    CHECK(c.limits.max_v2v_degree == 5);
    CHECK(c.limits.max_v2i_degree == 10);
    CHECK(c.rsu_bandwidth_mbps == 100.0);
    CHECK(c.alpha == 0.7);
    CHECK(c.r_th == 0.7);
    CHECK(c.metrics.throughput.p_loss_per_hop == 0.03);
    CHECK(c.solver.delta0 == 0.01);
    CHECK(c.solver.lifetime_min_cycles == 2);
  }

  TEST_CASE("comments and manual RSU positions parse") {
    std::istringstream in(R"(# header
[rsu]
count = 2
placement = manual   # inline
positions = 100,200; 300,400
; another comment
[experiment]
algorithm = motif
)");
    const auto c = parse_config(in);
    REQUIRE(c.rsu_positions.size() == 2);
    CHECK(c.rsu_positions[1].x == 300.0);
    CHECK(c.algorithm == Algorithm::motif);
  }

  TEST_CASE("every documented key is accepted") {
    const auto keys = config_keys();
    CHECK(std::find(keys.begin(), keys.end(), "scenario.steps") != keys.end());
    CHECK(std::find(keys.begin(), keys.end(), "regulation.q_urgent") != keys.end());
  }

  TEST_CASE("the bundled scenario validates") {
    const auto c = load_config(VANET_SOURCE_DIR "/scenarios/grid4x4.conf");
    CHECK(c.steps == 500);
    CHECK(c.seed == 42);
    CHECK(c.rsu_count == 4);
    CHECK_THROWS_AS(load_config(VANET_SOURCE_DIR "/scenarios/missing.conf"), ConfigError);
  }

  TEST_CASE("runnable steps are limited by the snapshots") {
    auto c = small_config(10);
    CHECK(runnable_steps(c, 11) == 10);
    CHECK(runnable_steps(c, 5) == 4);
    CHECK(runnable_steps(c, 0) == 0);
  }

  TEST_CASE("each algorithm emits one record per step") {
    auto c = small_config(12);
    const auto snaps = build_scenario(c);
    REQUIRE(snaps.size() == 13);
    for (auto alg : kAllAlgorithms) {
      c.algorithm = alg;
      const auto r = run_experiment(c, snaps);
      CHECK(r.steps.size() == 12);
      CHECK(r.decisions.size() == 12);
      for (const auto& d : r.decisions) CHECK(d.lambda1 + d.lambda2 == doctest::Approx(1.0).epsilon(1e-12));
      for (const auto& s : r.steps) {
        CHECK(s.metrics.l_avg >= 0.0);
        CHECK(s.metrics.throughput_mbps >= 0.0);
        CHECK(s.metrics.connectivity_rate <= 1.0);
      }
    }
  }

  TEST_CASE("formatted rows never print negative zero") {
    StepRecord r;
    r.metrics.step = 3;
    r.delta = -0.0;
    r.mode = "heuristic";
    const auto line = format_step(r);
    CHECK(line.find("-0,") == std::string::npos);
    CHECK(std::count(line.begin(), line.end(), ',') == std::count(kMetricsHeader, kMetricsHeader + std::strlen(kMetricsHeader), ','));
  }

  TEST_CASE("compare writes identical bytes on a repeat run") {
    const auto c = small_config(8);
    const auto base = std::filesystem::temp_directory_path() / "vanet_harness_test";
    std::filesystem::remove_all(base);
    compare_to_directory(c, base / "a", 2);
    compare_to_directory(c, base / "b", 1);
    std::size_t files = 0;
    for (const auto& e : std::filesystem::directory_iterator(base / "a")) {
      ++files;
      CHECK(slurp(e.path()) == slurp(base / "b" / e.path().filename()));
    }
    CHECK(files == 13);  // 3 per algorithm plus summary.csv
    std::filesystem::remove_all(base);
  }
}
