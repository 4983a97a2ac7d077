#include "vanet/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include "vanet/errors.hpp"

namespace vanet {

namespace {

std::string fmt(double v) {
  if (v == 0.0) v = 0.0;  // no negative zero
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

SceneBounds trace_bounds(const std::vector<NetworkSnapshot>& snapshots) {
  SceneBounds b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& s : snapshots) {
    for (const auto& v : s.vehicles) {
      b.min_x = std::min(b.min_x, v.x);
      b.min_y = std::min(b.min_y, v.y);
      b.max_x = std::max(b.max_x, v.x);
      b.max_y = std::max(b.max_y, v.y);
    }
  }
  if (!std::isfinite(b.min_x)) return SceneBounds{0.0, 0.0, 1.0, 1.0};
  if (b.max_x - b.min_x < 1.0) b.max_x = b.min_x + 1.0;
  if (b.max_y - b.min_y < 1.0) b.max_y = b.min_y + 1.0;
  return b;
}

// Per-snapshot inputs shared by decision and measurement.
struct StepInputs {
  NetworkPtr network;
  CandidateLinks candidates;
  DemandMatrix demand;
  CommPairSet pairs;
};

StepInputs prepare(const ExperimentConfig& c, const NetworkSnapshot& snapshot) {
  StepInputs in;
  in.network = make_network(snapshot);
  in.candidates = candidate_links(*in.network, {c.limits.v2v_range_m, c.limits.v2i_range_m, c.alpha, c.r_th});
  in.demand = demand_matrix(snapshot, c.demand);
  in.pairs = key_pairs(snapshot, in.demand, {c.limits.v2v_range_m, c.demand_threshold});
  return in;
}

std::vector<double> column(std::span<const MetricsRecord> rs, double MetricsRecord::*field) {
  std::vector<double> out;
  out.reserve(rs.size());
  for (const auto& r : rs) out.push_back(r.*field);
  return out;
}

}  // namespace

std::vector<NetworkSnapshot> build_scenario(const ExperimentConfig& c) {
  std::vector<NetworkSnapshot> snaps;
  SceneBounds bounds;
  if (c.source == ScenarioSource::synthetic) {
    auto m = c.mobility;
    m.steps = c.steps;
    snaps = generate_synthetic(m, c.seed);
    bounds = c.scene.value_or(grid_bounds(m));
  } else {
    std::ifstream in(c.trace_path);
    if (!in) throw ConfigError("cannot open trace " + c.trace_path.string());
    snaps = parse_fcd_trace(in, c.trace_format);
    bounds = c.scene.value_or(trace_bounds(snaps));
  }
  attach_rsus(snaps, place_rsus(bounds, c.rsu_count, c.rsu_placement, c.rsu_positions, c.rsu_bandwidth_mbps));
  return snaps;
}

int runnable_steps(const ExperimentConfig& c, std::size_t snapshot_count) {
  if (snapshot_count < 2) return 0;
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(c.steps), snapshot_count - 1));
}

// ---------------------------------------------------------------------------
// Statistics

double quantile_linear(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ShapeError("quantile of an empty series");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

MetricSummary describe(std::span<const double> values) {
  MetricSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  s.present = true;
  s.min = v.front();
  s.max = v.back();
  s.q1 = quantile_linear(v, 0.25);
  s.median = quantile_linear(v, 0.5);
  s.q3 = quantile_linear(v, 0.75);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double x : values) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

LineFit fit_line(std::span<const double> xs, std::span<const double> ys) {
  LineFit f;
  if (xs.size() != ys.size()) throw ShapeError("fit_line needs series of equal length");
  f.count = xs.size();
  if (xs.size() < 2) return f;
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return f;
  f.present = true;
  f.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

SummaryStats summarize(std::span<const MetricsRecord> records, std::size_t warmup) {
  SummaryStats s;
  s.records = records.size();
  s.warmup = warmup;
  const auto post = records.subspan(std::min(warmup, records.size()));
  s.l_avg = describe(column(post, &MetricsRecord::l_avg));
  s.mean_delay_s = describe(column(post, &MetricsRecord::mean_delay_s));
  s.throughput_mbps = describe(column(post, &MetricsRecord::throughput_mbps));
  s.connectivity_rate = describe(column(post, &MetricsRecord::connectivity_rate));
  s.path_vs_connectivity =
      fit_line(column(post, &MetricsRecord::connectivity_rate), column(post, &MetricsRecord::l_avg));
  return s;
}

// ---------------------------------------------------------------------------
// Control loop

ExperimentResult run_experiment(const ExperimentConfig& c, const std::vector<NetworkSnapshot>& snaps,
                                const ExperimentCallbacks& cb) {
  ExperimentResult result;
  result.algorithm = c.algorithm;
  const int steps = runnable_steps(c, snaps.size());
  if (steps == 0) {
    result.summary = summarize({}, static_cast<std::size_t>(c.warmup_steps));
    return result;
  }

  RegulationState reg(c.regulation);
  MotifTracker motif(MotifParams{c.motif.window, c.motif.heading_tolerance_rad, c.limits.v2v_range_m});
  LinkStrategy in_force;
  StepInputs now = prepare(c, snaps[0]);
  std::vector<MetricsRecord> records;

  for (int t = 0; t < steps; ++t) {
    StepRecord row;
    row.algorithm = c.algorithm;
    DecisionRecord dec;
    dec.step = snaps[t].step;
    LinkStrategy chosen;

    if (c.algorithm == Algorithm::hierarchical) {
      const auto hoods = build_neighborhoods(*now.network, c.limits.v2v_range_m, c.limits.v2i_range_m);
      const auto fused =
          run_fusion(extract_features(snaps[t], now.demand, c.limits.v2i_range_m), hoods, c.fusion);
      const auto problem = make_problem(now.network, now.candidates, now.pairs, &fused.fused, reg, c.limits,
                                        c.metrics, c.solver);
      const auto current = carry_over(in_force, *now.network, c.limits);
      const auto outcome = adjust(current, problem);
      chosen = outcome.result;
      row.mode = to_string(outcome.mode);
      row.q = outcome.q;
      row.delta = outcome.delta;
      row.applied = outcome.applied;
      dec.mode = row.mode;
      dec.q = outcome.q;
      dec.delta = outcome.delta;
      dec.degenerate_baseline = outcome.degenerate_baseline;
      dec.verification = outcome.verification.pass ? "pass" : "fail:" + outcome.verification.reason;
      dec.applied = outcome.applied;
      dec.locally_corrected = outcome.locally_corrected;
      dec.candidate_links = outcome.candidate.link_count();
      dec.unreachable_pairs = outcome.applied ? outcome.verification.unreachable.size() : 0;
    } else {
      switch (c.algorithm) {
        case Algorithm::greedy:
          chosen = greedy_build(*now.network, now.candidates, c.limits);
          break;
        case Algorithm::shortest_path:
          chosen = shortest_path_build(*now.network, now.candidates, now.pairs, c.limits);
          break;
        default:
          motif.observe(snaps[t]);
          chosen = motif_build(motif, *now.network, now.candidates, c.limits);
          break;
      }
      const Topology built(now.network, chosen, c.limits);
      row.mode = "baseline";
      row.q = complexity(now.network->vehicle_count(), graph_stats(built).link_density, c.solver);
      row.applied = true;
      dec.mode = row.mode;
      dec.q = row.q;
      dec.verification = "pass";
      dec.applied = true;
      dec.candidate_links = chosen.link_count();
    }
    dec.links = chosen.link_count();

    // Score the decision over the cycle it governs: the next snapshot.
    StepInputs next = prepare(c, snaps[t + 1]);
    const auto realized = carry_over(chosen, *next.network, c.limits);
    const Topology topo(next.network, realized, c.limits);
    const auto m = measure(topo, next.pairs, c.metrics);
    row.metrics = m.record;
    row.metrics.step = snaps[t].step;

    if (c.algorithm == Algorithm::hierarchical) {
      std::vector<double> delays;
      for (const auto& p : m.pairs.pairs) {
        if (p.hops >= 0) delays.push_back(p.delay_s);
      }
      update_t_norm(reg, delays);
      update_l_norm(reg, m.pairs.max_hops, m.stats.diameter);
      update_weights(reg, c.q_urgent);
      if (std::abs(reg.lambda1 + reg.lambda2 - 1.0) > 1e-12) throw Error("regulation weights no longer sum to 1");
    }
    dec.lambda1 = reg.lambda1;
    dec.lambda2 = reg.lambda2;
    dec.t_norm_s = reg.t_norm_s;
    dec.l_norm = reg.l_norm;

    in_force = chosen;
    now = std::move(next);
    records.push_back(row.metrics);
    if (cb.on_step) cb.on_step(row);
    if (cb.on_decision) cb.on_decision(dec);
    result.steps.push_back(std::move(row));
    result.decisions.push_back(std::move(dec));
  }
  result.summary = summarize(records, static_cast<std::size_t>(c.warmup_steps));
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  return run_experiment(config, build_scenario(config));
}

// ---------------------------------------------------------------------------
// Output

std::string format_step(const StepRecord& r) {
  const auto& m = r.metrics;
  return std::to_string(m.step) + "," + to_string(r.algorithm) + "," + fmt(m.l_avg) + "," + fmt(m.mean_delay_s) +
         "," + fmt(m.throughput_mbps) + "," + fmt(m.connectivity_rate) + "," + std::to_string(m.pair_count) + "," +
         r.mode + "," + fmt(r.q) + "," + fmt(r.delta) + "," + (r.applied ? "1" : "0");
}

std::string format_decision(const DecisionRecord& d) {
  return std::to_string(d.step) + "," + d.mode + "," + fmt(d.q) + "," + fmt(d.delta) + "," +
         (d.degenerate_baseline ? "1" : "0") + "," + d.verification + "," + (d.applied ? "1" : "0") + "," +
         (d.locally_corrected ? "1" : "0") + "," + std::to_string(d.candidate_links) + "," +
         std::to_string(d.links) + "," + std::to_string(d.unreachable_pairs) + "," + fmt(d.lambda1) + "," +
         fmt(d.lambda2) + "," + fmt(d.t_norm_s) + "," + fmt(d.l_norm);
}

void write_summary(std::ostream& out, const SummaryStats& s) {
  out << "# quantiles: linear interpolation between order statistics; warmup_steps=" << s.warmup
      << "; records=" << s.records << "\n";
  out << "metric,count,min,q1,median,q3,max,mean,stddev\n";
  auto row = [&](const char* name, const MetricSummary& m) {
    out << name << "," << m.count;
    if (!m.present) {
      out << ",NA,NA,NA,NA,NA,NA,NA\n";
      return;
    }
    out << "," << fmt(m.min) << "," << fmt(m.q1) << "," << fmt(m.median) << "," << fmt(m.q3) << "," << fmt(m.max)
        << "," << fmt(m.mean) << "," << fmt(m.stddev) << "\n";
  };
  row("L_avg", s.l_avg);
  row("mean_delay_s", s.mean_delay_s);
  row("throughput_mbps", s.throughput_mbps);
  row("connectivity_rate", s.connectivity_rate);
  const auto& f = s.path_vs_connectivity;
  out << "fit,count,pearson_r,slope,intercept\n";
  out << "L_avg~connectivity_rate," << f.count;
  if (f.present) {
    out << "," << fmt(f.r) << "," << fmt(f.slope) << "," << fmt(f.intercept) << "\n";
  } else {
    out << ",NA,NA,NA\n";
  }
}

void write_comparison(std::ostream& out, std::span<const AlgorithmSummary> rows, std::size_t warmup) {
  out << "# post-warmup medians (linear interpolation); warmup_steps=" << warmup << "\n";
  out << "algorithm,L_avg,mean_delay_s,throughput_mbps\n";
  auto cell = [](const MetricSummary& m) { return m.present ? fmt(m.median) : std::string("NA"); };
  for (const auto& r : rows) {
    out << to_string(r.algorithm) << "," << cell(r.summary.l_avg) << "," << cell(r.summary.mean_delay_s) << ","
        << cell(r.summary.throughput_mbps) << "\n";
  }
}

ExperimentResult run_to_directory(const ExperimentConfig& config, const std::vector<NetworkSnapshot>& snapshots,
                                  const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::string name = to_string(config.algorithm);
  auto open = [&](const std::string& file) {
    std::ofstream f(out_dir / file, std::ios::trunc);
    if (!f) throw Error("cannot write " + (out_dir / file).string());
    return f;
  };
  auto metrics = open(name + "_metrics.csv");
  auto decisions = open(name + "_decisions.csv");
  metrics << kMetricsHeader << "\n" << std::flush;
  decisions << kDecisionHeader << "\n" << std::flush;
  ExperimentCallbacks cb;
  cb.on_step = [&](const StepRecord& r) { metrics << format_step(r) << "\n" << std::flush; };
  cb.on_decision = [&](const DecisionRecord& d) { decisions << format_decision(d) << "\n" << std::flush; };
  auto result = run_experiment(config, snapshots, cb);
  auto summary = open(name + "_summary.csv");
  write_summary(summary, result.summary);
  return result;
}

unsigned thread_limit_from_env() {
  const char* v = std::getenv("VANET_SIM_THREADS");
  if (!v || !*v) return 0;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 0) throw ConfigError("VANET_SIM_THREADS must be a non-negative integer");
  return static_cast<unsigned>(n);
}

std::vector<ExperimentResult> compare_to_directory(const ExperimentConfig& config,
                                                   const std::filesystem::path& out_dir, unsigned threads) {
  const auto snapshots = build_scenario(config);
  constexpr std::size_t kCount = std::size(kAllAlgorithms);
  std::vector<ExperimentResult> results(kCount);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, kCount);

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t i = next++; i < kCount; i = next++) {
      try {
        auto c = config;
        c.algorithm = kAllAlgorithms[i];
        results[i] = run_to_directory(c, snapshots, out_dir);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  std::vector<AlgorithmSummary> rows;
  for (const auto& r : results) rows.push_back({r.algorithm, r.summary});
  std::ofstream f(out_dir / "summary.csv", std::ios::trunc);
  if (!f) throw Error("cannot write " + (out_dir / "summary.csv").string());
  write_comparison(f, rows, static_cast<std::size_t>(config.warmup_steps));
  return results;
}

}  // namespace vanet
