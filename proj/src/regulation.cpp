#include "vanet/regulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "vanet/errors.hpp"

namespace vanet {

namespace {

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};

Moments population_moments(std::span<const double> xs) {
  Moments m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - m.mean) * (x - m.mean);
  m.stddev = std::sqrt(ss / static_cast<double>(xs.size()));
  return m;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

RegulationState::RegulationState(const RegulationParams& p)
    : params(p),
      t_norm_s(p.initial_t_norm_s),
      l_norm(p.initial_l_norm),
      lambda1(p.initial_lambda1),
      lambda2(1.0 - p.initial_lambda1),
      beta(p.beta) {}

std::vector<double> filter_3sigma(std::span<const double> samples) {
  if (samples.size() < 3) return {samples.begin(), samples.end()};
  const auto m = population_moments(samples);
  const double lo = m.mean - 3.0 * m.stddev;
  const double hi = m.mean + 3.0 * m.stddev;
  std::vector<double> out;
  out.reserve(samples.size());
  for (double x : samples) {
    if (x >= lo && x <= hi) out.push_back(x);
  }
  return out;
}

void update_t_norm(RegulationState& state, std::span<const double> samples) {
  const auto& p = state.params;
  for (double s : samples) {
    state.delay_history.push_back(s);
    while (state.delay_history.size() > p.history_capacity) state.delay_history.pop_front();
  }
  const std::vector<double> window(state.delay_history.begin(), state.delay_history.end());
  const auto filtered = filter_3sigma(window);
  if (filtered.empty()) return;
  const double t_max = *std::max_element(filtered.begin(), filtered.end());
  if (!(t_max > 0.0)) return;
  state.sigma_t_s = population_moments(filtered).stddev;
  state.beta = p.adaptive_beta ? std::clamp(state.sigma_t_s / p.sigma_ref_s, p.beta_min, p.beta_max) : p.beta;
  state.t_norm_s = state.beta * t_max + (1.0 - state.beta) * state.t_norm_s;
}

void update_l_norm(RegulationState& state, double l_max_real, double diameter) {
  state.l_norm = std::max({l_max_real, state.params.gamma * diameter, 1.0});
}

void update_weights(RegulationState& state, double q_urgent) {
  const auto& p = state.params;
  const double diff = q_urgent - p.q_urgent_threshold;
  const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
  if (sign == 0.0) return;
  state.lambda1 = std::clamp(state.lambda1 + p.delta_lambda * sign, p.lambda_min, p.lambda_max);
  state.lambda2 = 1.0 - state.lambda1;
}

double composite_objective(const RegulationState& state, double l_avg, double mean_delay_s) {
  return state.lambda1 * (l_avg / state.l_norm) + state.lambda2 * (mean_delay_s / state.t_norm_s);
}

ImprovementRate improvement_rate(const RegulationState& state, PathDelay before, PathDelay after) {
  ImprovementRate r;
  if (before.l_avg > 0.0) {
    r.delta += state.lambda1 * (before.l_avg - after.l_avg) / (before.l_avg * state.l_norm);
  } else {
    r.degenerate_baseline = true;
  }
  if (before.mean_delay_s > 0.0) {
    r.delta += state.lambda2 * (before.mean_delay_s - after.mean_delay_s) / (before.mean_delay_s * state.t_norm_s);
  } else {
    r.degenerate_baseline = true;
  }
  return r;
}

void save_checkpoint(std::ostream& out, const RegulationState& s) {
  const auto& p = s.params;
  out << "t_norm_s = " << fmt17(s.t_norm_s) << '\n'
      << "l_norm = " << fmt17(s.l_norm) << '\n'
      << "lambda1 = " << fmt17(s.lambda1) << '\n'
      << "lambda2 = " << fmt17(s.lambda2) << '\n'
      << "beta = " << fmt17(s.beta) << '\n'
      << "sigma_t_s = " << fmt17(s.sigma_t_s) << '\n'
      << "initial_t_norm_s = " << fmt17(p.initial_t_norm_s) << '\n'
      << "initial_l_norm = " << fmt17(p.initial_l_norm) << '\n'
      << "initial_lambda1 = " << fmt17(p.initial_lambda1) << '\n'
      << "lambda_min = " << fmt17(p.lambda_min) << '\n'
      << "lambda_max = " << fmt17(p.lambda_max) << '\n'
      << "delta_lambda = " << fmt17(p.delta_lambda) << '\n'
      << "q_urgent_threshold = " << fmt17(p.q_urgent_threshold) << '\n'
      << "gamma = " << fmt17(p.gamma) << '\n'
      << "beta_fixed = " << fmt17(p.beta) << '\n'
      << "adaptive_beta = " << (p.adaptive_beta ? 1 : 0) << '\n'
      << "sigma_ref_s = " << fmt17(p.sigma_ref_s) << '\n'
      << "beta_min = " << fmt17(p.beta_min) << '\n'
      << "beta_max = " << fmt17(p.beta_max) << '\n'
      << "history_capacity = " << p.history_capacity << '\n'
      << "delay_history =";
  for (std::size_t i = 0; i < s.delay_history.size(); ++i) out << (i == 0 ? " " : ",") << fmt17(s.delay_history[i]);
  out << '\n';
}

RegulationState load_checkpoint(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  auto num = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw FieldError(key, "checkpoint");
    try {
      std::size_t used = 0;
      double v = std::stod(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument(key);
      return v;
    } catch (const std::exception&) {
      throw FieldError(key, "checkpoint");
    }
  };
  RegulationParams p;
  p.initial_t_norm_s = num("initial_t_norm_s");
  p.initial_l_norm = num("initial_l_norm");
  p.initial_lambda1 = num("initial_lambda1");
  p.lambda_min = num("lambda_min");
  p.lambda_max = num("lambda_max");
  p.delta_lambda = num("delta_lambda");
  p.q_urgent_threshold = num("q_urgent_threshold");
  p.gamma = num("gamma");
  p.beta = num("beta_fixed");
  p.adaptive_beta = num("adaptive_beta") != 0.0;
  p.sigma_ref_s = num("sigma_ref_s");
  p.beta_min = num("beta_min");
  p.beta_max = num("beta_max");
  p.history_capacity = static_cast<std::size_t>(num("history_capacity"));

  RegulationState s(p);
  s.t_norm_s = num("t_norm_s");
  s.l_norm = num("l_norm");
  s.lambda1 = num("lambda1");
  s.lambda2 = num("lambda2");
  s.beta = num("beta");
  s.sigma_t_s = num("sigma_t_s");
  if (auto it = kv.find("delay_history"); it != kv.end() && !it->second.empty()) {
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        s.delay_history.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw FieldError("delay_history", "checkpoint");
      }
    }
  }
  return s;
}

}  // namespace vanet
