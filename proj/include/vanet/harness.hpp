#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vanet/config.hpp"

namespace vanet {

/// Snapshots for a config: synthetic mobility or a parsed trace, with RSUs
/// attached. Throws ConfigError, PlacementError or trace parse errors.
std::vector<NetworkSnapshot> build_scenario(const ExperimentConfig& config);

/// Number of control steps a scenario supports: each step is scored on the
/// following snapshot.
int runnable_steps(const ExperimentConfig& config, std::size_t snapshot_count);

/// One CSV row of the per-step metrics stream.
struct StepRecord {
  MetricsRecord metrics;
  Algorithm algorithm = Algorithm::hierarchical;
  std::string mode;  // exact | heuristic | baseline
  double q = 0.0;
  double delta = 0.0;
  bool applied = false;
};

/// One line of the decision log.
struct DecisionRecord {
  std::int64_t step = 0;
  std::string mode;
  double q = 0.0;
  double delta = 0.0;
  bool degenerate_baseline = false;
  std::string verification;  // pass | fail:<reason>
  bool applied = false;
  bool locally_corrected = false;
  std::size_t candidate_links = 0;
  std::size_t links = 0;
  std::size_t unreachable_pairs = 0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double t_norm_s = 0.0;
  double l_norm = 0.0;
};

struct MetricSummary {
  bool present = false;
  std::size_t count = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single value
};

struct LineFit {
  bool present = false;  // needs two points and non-zero variance in both series
  std::size_t count = 0;
  double r = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
};

struct SummaryStats {
  std::size_t records = 0;  // all records, warmup included
  std::size_t warmup = 0;
  MetricSummary l_avg;
  MetricSummary mean_delay_s;
  MetricSummary throughput_mbps;
  MetricSummary connectivity_rate;
  LineFit path_vs_connectivity;  // x = connectivity rate, y = L_avg
};

/// Quantile of sorted data by linear interpolation between order statistics
/// (h = (n - 1) q). Throws ShapeError on empty input.
double quantile_linear(std::span<const double> sorted, double q);

MetricSummary describe(std::span<const double> values);

/// Pearson correlation and least-squares line of y on x.
LineFit fit_line(std::span<const double> xs, std::span<const double> ys);

/// Statistics over records after the first `warmup` steps.
SummaryStats summarize(std::span<const MetricsRecord> records, std::size_t warmup);

struct ExperimentResult {
  Algorithm algorithm = Algorithm::hierarchical;
  std::vector<StepRecord> steps;
  std::vector<DecisionRecord> decisions;
  SummaryStats summary;
};

struct ExperimentCallbacks {
  std::function<void(const StepRecord&)> on_step;
  std::function<void(const DecisionRecord&)> on_decision;
};

/// Runs the control loop of `config.algorithm` over `snapshots`.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::vector<NetworkSnapshot>& snapshots,
                                const ExperimentCallbacks& callbacks = {});
ExperimentResult run_experiment(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Output

inline constexpr const char* kMetricsHeader =
    "step,algorithm,L_avg,mean_delay_s,throughput_mbps,connectivity_rate,pair_count,mode,Q,delta,applied";
inline constexpr const char* kDecisionHeader =
    "step,mode,Q,delta,degenerate_baseline,verification,applied,locally_corrected,candidate_links,links,"
    "unreachable_pairs,lambda1,lambda2,t_norm_s,l_norm";

std::string format_step(const StepRecord& record);
std::string format_decision(const DecisionRecord& record);
void write_summary(std::ostream& out, const SummaryStats& summary);

struct AlgorithmSummary {
  Algorithm algorithm;
  SummaryStats summary;
};

/// Comparison table: one row per algorithm with the median L_avg, delay and
/// throughput.
void write_comparison(std::ostream& out, std::span<const AlgorithmSummary> rows, std::size_t warmup);

/// Runs one algorithm and writes `<alg>_metrics.csv`, `<alg>_decisions.csv`
/// and `<alg>_summary.csv` under `out_dir`, row by row.
ExperimentResult run_to_directory(const ExperimentConfig& config, const std::vector<NetworkSnapshot>& snapshots,
                                  const std::filesystem::path& out_dir);

/// Runs all four algorithms (concurrently, at most `threads` at a time;
/// 0 = hardware concurrency) and writes their files plus `summary.csv`.
std::vector<ExperimentResult> compare_to_directory(const ExperimentConfig& config,
                                                   const std::filesystem::path& out_dir, unsigned threads);

/// Thread cap from VANET_SIM_THREADS (0 or unset = auto).
unsigned thread_limit_from_env();

}  // namespace vanet
