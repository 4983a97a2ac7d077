#pragma once

#include <cstddef>
#include <deque>
#include <iosfwd>
#include <span>
#include <vector>

namespace vanet {

struct RegulationParams {
  double initial_t_norm_s = 0.05;
  double initial_l_norm = 10.0;
  double initial_lambda1 = 0.5;
  double lambda_min = 0.1;
  double lambda_max = 0.9;
  double delta_lambda = 0.05;
  double q_urgent_threshold = 0.5;
  double gamma = 1.2;            // safety coefficient on the network diameter
  double beta = 0.5;             // EWMA weight when adaptation is off
  bool adaptive_beta = true;     // beta = clamp(sigma_T / sigma_ref, beta_min, beta_max)
  double sigma_ref_s = 0.01;
  double beta_min = 0.2;
  double beta_max = 0.8;
  std::size_t history_capacity = 200;
};

/// Controller memory carried from step to step.
struct RegulationState {
  RegulationParams params;
  double t_norm_s = 0.05;
  double l_norm = 10.0;
  double lambda1 = 0.5;
  double lambda2 = 0.5;
  double beta = 0.5;       // last EWMA weight used
  double sigma_t_s = 0.0;  // stddev of the last filtered window
  std::deque<double> delay_history;

  explicit RegulationState(const RegulationParams& p = {});
};

/// Removes samples outside mean +/- 3 population standard deviations.
/// Fewer than three samples pass through unchanged.
std::vector<double> filter_3sigma(std::span<const double> samples);

/// Appends delay samples to the bounded history and moves T_norm towards the
/// largest filtered sample: T_norm = beta * T_max + (1 - beta) * T_norm_prev.
/// No-op when the filtered history is empty.
void update_t_norm(RegulationState& state, std::span<const double> samples);

/// L_norm = max(L_max_real, gamma * Z), floored at 1.
void update_l_norm(RegulationState& state, double l_max_real, double diameter);

/// Steps lambda1 by delta_lambda towards the urgent side, clamped to
/// [lambda_min, lambda_max]; lambda2 = 1 - lambda1.
void update_weights(RegulationState& state, double q_urgent);

/// lambda1 * L_avg / L_norm + lambda2 * delay / T_norm. Lower is better.
double composite_objective(const RegulationState& state, double l_avg, double mean_delay_s);

struct PathDelay {
  double l_avg = 0.0;
  double mean_delay_s = 0.0;
};

struct ImprovementRate {
  double delta = 0.0;
  bool degenerate_baseline = false;  // a zero baseline term was dropped
};

/// Joint improvement rate of `after` relative to `before`:
/// lambda1 (L - L*) / (L L_norm) + lambda2 (T - T*) / (T T_norm).
ImprovementRate improvement_rate(const RegulationState& state, PathDelay before, PathDelay after);

/// Key-value checkpoint, one `key = value` per line.
void save_checkpoint(std::ostream& out, const RegulationState& state);
RegulationState load_checkpoint(std::istream& in);

}  // namespace vanet
