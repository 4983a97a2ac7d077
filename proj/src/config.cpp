#include "vanet/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

#include "vanet/errors.hpp"

namespace vanet {

const char* to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::hierarchical:
      return "hierarchical";
    case Algorithm::greedy:
      return "greedy";
    case Algorithm::shortest_path:
      return "shortest_path";
    case Algorithm::motif:
      return "motif";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  for (auto a : kAllAlgorithms) {
    if (name == to_string(a)) return a;
  }
  throw ConfigError("unknown algorithm '" + name + "' (expected hierarchical, greedy, shortest_path or motif)");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string where(const std::string& key, std::size_t line) {
  return "line " + std::to_string(line) + ": " + key;
}

double to_double(const std::string& key, const IniValue& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v.value, &used);
    if (used == v.value.size() && std::isfinite(x)) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError(where(key, v.line) + " expects a number, got '" + v.value + "'");
}

long long to_integer(const std::string& key, const IniValue& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v.value, &used);
    if (used == v.value.size()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError(where(key, v.line) + " expects an integer, got '" + v.value + "'");
}

bool to_bool(const std::string& key, const IniValue& v) {
  if (v.value == "true" || v.value == "1" || v.value == "yes") return true;
  if (v.value == "false" || v.value == "0" || v.value == "no") return false;
  throw ConfigError(where(key, v.line) + " expects true or false, got '" + v.value + "'");
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const IniValue&, const std::filesystem::path&)>;

template <class T>
Setter num(T ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& k, const IniValue& v, const std::filesystem::path&) {
    if constexpr (std::is_floating_point_v<T>) {
      c.*field = static_cast<T>(to_double(k, v));
    } else {
      c.*field = static_cast<T>(to_integer(k, v));
    }
  };
}

template <class F>
Setter with(F f) {
  return [f](ExperimentConfig& c, const std::string& k, const IniValue& v, const std::filesystem::path&) {
    f(c, k, v);
  };
}

const std::map<std::string, Setter>& registry() {
  static const std::map<std::string, Setter> r = [] {
    std::map<std::string, Setter> m;
    auto d = [&](const std::string& key, auto get) {
      m[key] = with([get](ExperimentConfig& c, const std::string& k, const IniValue& v) { get(c) = to_double(k, v); });
    };
    auto i = [&](const std::string& key, auto get) {
      m[key] = with([get](ExperimentConfig& c, const std::string& k, const IniValue& v) {
        get(c) = static_cast<std::remove_reference_t<decltype(get(c))>>(to_integer(k, v));
      });
    };

    m["scenario.source"] = with([](ExperimentConfig& c, const std::string& k, const IniValue& v) {
      if (v.value == "synthetic") {
        c.source = ScenarioSource::synthetic;
      } else if (v.value == "trace") {
        c.source = ScenarioSource::trace;
      } else {
        throw ConfigError(where(k, v.line) + " must be synthetic or trace");
      }
    });
    m["scenario.trace_path"] = [](ExperimentConfig& c, const std::string&, const IniValue& v,
                                  const std::filesystem::path& base) {
      std::filesystem::path p = v.value;
      c.trace_path = p.is_relative() && !base.empty() ? base / p : p;
    };
    m["scenario.trace_format"] = with([](ExperimentConfig& c, const std::string& k, const IniValue& v) {
      if (v.value == "csv") {
        c.trace_format = TraceFormat::csv;
      } else if (v.value == "fcd_xml") {
        c.trace_format = TraceFormat::fcd_xml;
      } else {
        throw ConfigError(where(k, v.line) + " must be csv or fcd_xml");
      }
    });
    m["scenario.steps"] = num(&ExperimentConfig::steps);
    m["scenario.seed"] = with([](ExperimentConfig& c, const std::string& k, const IniValue& v) {
      const long long s = to_integer(k, v);
      if (s < 0) throw ConfigError(where(k, v.line) + " must be non-negative");
      c.seed = static_cast<std::uint64_t>(s);
    });
    d("scenario.step_s", [](ExperimentConfig& c) -> double& { return c.mobility.step_s; });

    i("mobility.grid_columns", [](ExperimentConfig& c) -> int& { return c.mobility.grid_columns; });
    i("mobility.grid_rows", [](ExperimentConfig& c) -> int& { return c.mobility.grid_rows; });
    d("mobility.block_length_m", [](ExperimentConfig& c) -> double& { return c.mobility.block_length_m; });
    d("mobility.speed_limit_mps", [](ExperimentConfig& c) -> double& { return c.mobility.speed_limit_mps; });
    d("mobility.arterial_speed_limit_mps",
      [](ExperimentConfig& c) -> double& { return c.mobility.arterial_speed_limit_mps; });
    d("mobility.min_speed_factor", [](ExperimentConfig& c) -> double& { return c.mobility.min_speed_factor; });
    d("mobility.max_accel_mps2", [](ExperimentConfig& c) -> double& { return c.mobility.max_accel_mps2; });
    d("mobility.max_decel_mps2", [](ExperimentConfig& c) -> double& { return c.mobility.max_decel_mps2; });
    d("mobility.speed_change_prob", [](ExperimentConfig& c) -> double& { return c.mobility.speed_change_prob; });
    d("mobility.turn_left_prob", [](ExperimentConfig& c) -> double& { return c.mobility.turn_left_prob; });
    d("mobility.turn_right_prob", [](ExperimentConfig& c) -> double& { return c.mobility.turn_right_prob; });
    d("mobility.spawn_rate_per_s", [](ExperimentConfig& c) -> double& { return c.mobility.spawn_rate_per_s; });
    d("mobility.spawn_rate_end_per_s",
      [](ExperimentConfig& c) -> double& { return c.mobility.spawn_rate_end_per_s; });
    d("mobility.mean_trip_s", [](ExperimentConfig& c) -> double& { return c.mobility.mean_trip_s; });

    m["rsu.count"] = num(&ExperimentConfig::rsu_count);
    m["rsu.placement"] = with([](ExperimentConfig& c, const std::string& k, const IniValue& v) {
      if (v.value == "grid") {
        c.rsu_placement = RsuPlacement::grid;
      } else if (v.value == "manual") {
        c.rsu_placement = RsuPlacement::manual;
      } else {
        throw ConfigError(where(k, v.line) + " must be grid or manual");
      }
    });
    m["rsu.positions"] = with([](ExperimentConfig& c, const std::string& k, const IniValue& v) {
      c.rsu_positions.clear();
      std::stringstream ss(v.value);
      std::string item;
      while (std::getline(ss, item, ';')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto comma = item.find(',');
        if (comma == std::string::npos) throw ConfigError(where(k, v.line) + " expects 'x,y; x,y; ...'");
        const IniValue xs{trim(item.substr(0, comma)), v.line};
        const IniValue ys{trim(item.substr(comma + 1)), v.line};
        c.rsu_positions.push_back({to_double(k, xs), to_double(k, ys)});
      }
    });
    m["rsu.bandwidth_mbps"] = num(&ExperimentConfig::rsu_bandwidth_mbps);
    m["rsu.scene"] = with([](ExperimentConfig& c, const std::string& k, const IniValue& v) {
      std::stringstream ss(v.value);
      std::string tok;
      std::vector<double> xs;
      while (std::getline(ss, tok, ',')) xs.push_back(to_double(k, IniValue{trim(tok), v.line}));
      if (xs.size() != 4) throw ConfigError(where(k, v.line) + " expects 'min_x, min_y, max_x, max_y'");
      c.scene = SceneBounds{xs[0], xs[1], xs[2], xs[3]};
    });

    d("links.v2v_range_m", [](ExperimentConfig& c) -> double& { return c.limits.v2v_range_m; });
    d("links.v2i_range_m", [](ExperimentConfig& c) -> double& { return c.limits.v2i_range_m; });
    i("links.max_v2v_degree", [](ExperimentConfig& c) -> int& { return c.limits.max_v2v_degree; });
    i("links.max_v2i_degree", [](ExperimentConfig& c) -> int& { return c.limits.max_v2i_degree; });
    m["links.alpha"] = num(&ExperimentConfig::alpha);
    m["links.r_th"] = num(&ExperimentConfig::r_th);

    d("demand.d0_m", [](ExperimentConfig& c) -> double& { return c.demand.d0_m; });
    m["demand.threshold"] = num(&ExperimentConfig::demand_threshold);

    d("metrics.k_v", [](ExperimentConfig& c) -> double& { return c.metrics.delay.k_v; });
    d("metrics.k_i", [](ExperimentConfig& c) -> double& { return c.metrics.delay.k_i; });
    d("metrics.tau_v_s", [](ExperimentConfig& c) -> double& { return c.metrics.delay.tau_v_s; });
    d("metrics.tau_i_s", [](ExperimentConfig& c) -> double& { return c.metrics.delay.tau_i_s; });
    d("metrics.packet_bits", [](ExperimentConfig& c) -> double& { return c.metrics.delay.packet_bits; });
    d("metrics.eta_v", [](ExperimentConfig& c) -> double& { return c.metrics.throughput.eta_v; });
    d("metrics.eta_i", [](ExperimentConfig& c) -> double& { return c.metrics.throughput.eta_i; });
    d("metrics.p_loss_per_hop", [](ExperimentConfig& c) -> double& { return c.metrics.throughput.p_loss_per_hop; });
    d("metrics.v2v_base_mbps", [](ExperimentConfig& c) -> double& { return c.metrics.bandwidth.v2v_base_mbps; });

    d("fusion.decay_lambda", [](ExperimentConfig& c) -> double& { return c.fusion.decay_lambda; });
    d("fusion.self_weight_vehicle", [](ExperimentConfig& c) -> double& { return c.fusion.self_weight_vehicle; });
    d("fusion.self_weight_rsu", [](ExperimentConfig& c) -> double& { return c.fusion.self_weight_rsu; });
    i("fusion.max_rounds", [](ExperimentConfig& c) -> int& { return c.fusion.max_rounds; });
    d("fusion.epsilon", [](ExperimentConfig& c) -> double& { return c.fusion.epsilon; });

    d("regulation.initial_t_norm_s", [](ExperimentConfig& c) -> double& { return c.regulation.initial_t_norm_s; });
    d("regulation.initial_l_norm", [](ExperimentConfig& c) -> double& { return c.regulation.initial_l_norm; });
    d("regulation.initial_lambda1", [](ExperimentConfig& c) -> double& { return c.regulation.initial_lambda1; });
    d("regulation.lambda_min", [](ExperimentConfig& c) -> double& { return c.regulation.lambda_min; });
    d("regulation.lambda_max", [](ExperimentConfig& c) -> double& { return c.regulation.lambda_max; });
    d("regulation.delta_lambda", [](ExperimentConfig& c) -> double& { return c.regulation.delta_lambda; });
    d("regulation.q_urgent_threshold",
      [](ExperimentConfig& c) -> double& { return c.regulation.q_urgent_threshold; });
    d("regulation.gamma", [](ExperimentConfig& c) -> double& { return c.regulation.gamma; });
    d("regulation.beta", [](ExperimentConfig& c) -> double& { return c.regulation.beta; });
    m["regulation.adaptive_beta"] = with([](ExperimentConfig& c, const std::string& k, const IniValue& v) {
      c.regulation.adaptive_beta = to_bool(k, v);
    });
    d("regulation.sigma_ref_s", [](ExperimentConfig& c) -> double& { return c.regulation.sigma_ref_s; });
    d("regulation.beta_min", [](ExperimentConfig& c) -> double& { return c.regulation.beta_min; });
    d("regulation.beta_max", [](ExperimentConfig& c) -> double& { return c.regulation.beta_max; });
    m["regulation.history_capacity"] = with([](ExperimentConfig& c, const std::string& k, const IniValue& v) {
      const long long n = to_integer(k, v);
      if (n < 1) throw ConfigError(where(k, v.line) + " must be at least 1");
      c.regulation.history_capacity = static_cast<std::size_t>(n);
    });
    m["regulation.q_urgent"] = num(&ExperimentConfig::q_urgent);

    d("solver.xi", [](ExperimentConfig& c) -> double& { return c.solver.xi; });
    d("solver.zeta", [](ExperimentConfig& c) -> double& { return c.solver.zeta; });
    d("solver.q0", [](ExperimentConfig& c) -> double& { return c.solver.q0; });
    d("solver.delta0", [](ExperimentConfig& c) -> double& { return c.solver.delta0; });
    i("solver.k_min", [](ExperimentConfig& c) -> int& { return c.solver.k_min; });
    i("solver.exact_max_vehicles", [](ExperimentConfig& c) -> int& { return c.solver.exact_max_vehicles; });
    d("solver.exact_time_budget_s", [](ExperimentConfig& c) -> double& { return c.solver.exact_time_budget_s; });
    i("solver.enumeration_max_links", [](ExperimentConfig& c) -> int& { return c.solver.enumeration_max_links; });
    i("solver.lifetime_min_cycles", [](ExperimentConfig& c) -> int& { return c.solver.lifetime_min_cycles; });
    i("solver.lifetime_horizon_cycles",
      [](ExperimentConfig& c) -> int& { return c.solver.lifetime_horizon_cycles; });
    d("solver.utility_adaptability", [](ExperimentConfig& c) -> double& { return c.solver.utility_adaptability; });
    d("solver.utility_demand", [](ExperimentConfig& c) -> double& { return c.solver.utility_demand; });
    d("solver.utility_distance", [](ExperimentConfig& c) -> double& { return c.solver.utility_distance; });

    m["motif.window"] = with([](ExperimentConfig& c, const std::string& k, const IniValue& v) {
      const long long n = to_integer(k, v);
      if (n < 1) throw ConfigError(where(k, v.line) + " must be at least 1");
      c.motif.window = static_cast<std::size_t>(n);
    });
    m["motif.heading_tolerance_deg"] = with([](ExperimentConfig& c, const std::string& k, const IniValue& v) {
      c.motif.heading_tolerance_rad = to_double(k, v) * 3.14159265358979323846 / 180.0;
    });

    m["experiment.algorithm"] = with(
        [](ExperimentConfig& c, const std::string&, const IniValue& v) { c.algorithm = parse_algorithm(v.value); });
    m["experiment.warmup_steps"] = num(&ExperimentConfig::warmup_steps);
    m["experiment.output_dir"] = [](ExperimentConfig& c, const std::string&, const IniValue& v,
                                    const std::filesystem::path& base) {
      std::filesystem::path p = v.value;
      c.output_dir = p.is_relative() && !base.empty() ? base / p : p;
    };
    return m;
  }();
  return r;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

IniDocument parse_ini(std::istream& in) {
  IniDocument doc;
  std::string section;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) throw ConfigError("line " + std::to_string(line) + ": malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      doc[section];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line) + ": expected 'key = value'");
    if (section.empty()) throw ConfigError("line " + std::to_string(line) + ": key outside any [section]");
    const std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (const auto hash = value.find(" #"); hash != std::string::npos) value = trim(value.substr(0, hash));
    if (key.empty()) throw ConfigError("line " + std::to_string(line) + ": empty key");
    auto& keys = doc[section];
    if (keys.count(key)) throw ConfigError("line " + std::to_string(line) + ": duplicate key " + section + "." + key);
    keys[key] = {value, line};
  }
  return doc;
}

ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  const auto doc = parse_ini(in);
  ExperimentConfig c;
  const auto& reg = registry();
  for (const auto& [section, keys] : doc) {
    for (const auto& [key, value] : keys) {
      const std::string full = section + "." + key;
      auto it = reg.find(full);
      if (it == reg.end()) throw ConfigError(where(full, value.line) + " is not a recognised setting");
      it->second(c, full, value, base_dir);
    }
  }
  c.mobility.steps = c.steps;
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return parse_config(in, path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void validate(const ExperimentConfig& c) {
  require(c.steps >= 0, "scenario.steps must be non-negative");
  require(c.mobility.step_s > 0.0, "scenario.step_s must be positive");
  require(c.source != ScenarioSource::trace || !c.trace_path.empty(), "scenario.trace_path is required for traces");
  const auto& m = c.mobility;
  require(m.grid_columns >= 2 && m.grid_rows >= 2, "mobility grid needs at least 2x2 intersections");
  require(m.block_length_m > 0.0, "mobility.block_length_m must be positive");
  require(m.speed_limit_mps > 0.0, "mobility.speed_limit_mps must be positive");
  require(m.min_speed_factor > 0.0 && m.min_speed_factor <= 1.0, "mobility.min_speed_factor must be in (0, 1]");
  require(m.max_accel_mps2 > 0.0 && m.max_decel_mps2 > 0.0, "mobility acceleration bounds must be positive");
  require(m.speed_change_prob >= 0.0 && m.speed_change_prob <= 1.0, "mobility.speed_change_prob must be in [0, 1]");
  require(m.turn_left_prob >= 0.0 && m.turn_right_prob >= 0.0 && m.turn_left_prob + m.turn_right_prob <= 1.0,
          "mobility turn probabilities must be non-negative and sum to at most 1");
  require(m.spawn_rate_per_s >= 0.0, "mobility.spawn_rate_per_s must be non-negative");
  require(m.mean_trip_s > 0.0, "mobility.mean_trip_s must be positive");

  require(c.rsu_count >= 0, "rsu.count must be non-negative");
  require(c.rsu_bandwidth_mbps > 0.0, "rsu.bandwidth_mbps must be positive");
  require(c.rsu_placement != RsuPlacement::manual || static_cast<int>(c.rsu_positions.size()) == c.rsu_count,
          "rsu.positions must list rsu.count positions for manual placement");

  require(c.limits.v2v_range_m > 0.0 && c.limits.v2i_range_m > 0.0, "link ranges must be positive");
  require(c.limits.max_v2v_degree >= 1 && c.limits.max_v2i_degree >= 1, "degree caps must be at least 1");
  require(c.alpha >= 0.0 && c.alpha <= 1.0, "links.alpha must be in [0, 1]");
  require(c.r_th >= 0.0 && c.r_th <= 1.0, "links.r_th must be in [0, 1]");
  require(c.demand.d0_m > 0.0, "demand.d0_m must be positive");
  require(c.demand_threshold >= 0.0 && c.demand_threshold <= 1.0, "demand.threshold must be in [0, 1]");

  const auto& d = c.metrics.delay;
  require(d.k_v > 0.0 && d.k_i > 0.0 && d.tau_v_s > 0.0 && d.tau_i_s > 0.0 && d.packet_bits > 0.0,
          "delay constants must be positive");
  const auto& t = c.metrics.throughput;
  require(t.eta_v > 0.0 && t.eta_v <= 1.0 && t.eta_i > 0.0 && t.eta_i <= 1.0, "efficiencies must be in (0, 1]");
  require(t.p_loss_per_hop >= 0.0 && t.p_loss_per_hop < 1.0, "metrics.p_loss_per_hop must be in [0, 1)");
  require(c.metrics.bandwidth.v2v_base_mbps > 0.0, "metrics.v2v_base_mbps must be positive");

  const auto& f = c.fusion;
  require(f.decay_lambda >= 0.0, "fusion.decay_lambda must be non-negative");
  require(f.self_weight_vehicle >= 0.0 && f.self_weight_vehicle <= 1.0 && f.self_weight_rsu >= 0.0 &&
              f.self_weight_rsu <= 1.0,
          "fusion self weights must be in [0, 1]");
  require(f.max_rounds >= 1, "fusion.max_rounds must be at least 1");
  require(f.epsilon > 0.0, "fusion.epsilon must be positive");

  const auto& r = c.regulation;
  require(r.initial_t_norm_s > 0.0 && r.initial_l_norm > 0.0, "initial norms must be positive");
  require(r.lambda_min > 0.0 && r.lambda_min <= r.lambda_max && r.lambda_max < 1.0,
          "regulation lambda bounds must satisfy 0 < lambda_min <= lambda_max < 1");
  require(r.initial_lambda1 >= r.lambda_min && r.initial_lambda1 <= r.lambda_max,
          "regulation.initial_lambda1 must lie within the lambda bounds");
  require(r.delta_lambda > 0.0, "regulation.delta_lambda must be positive");
  require(r.gamma > 0.0, "regulation.gamma must be positive");
  require(r.beta > 0.0 && r.beta <= 1.0, "regulation.beta must be in (0, 1]");
  require(r.sigma_ref_s > 0.0, "regulation.sigma_ref_s must be positive");
  require(r.beta_min > 0.0 && r.beta_min <= r.beta_max && r.beta_max <= 1.0,
          "regulation beta bounds must satisfy 0 < beta_min <= beta_max <= 1");
  require(c.q_urgent >= 0.0 && c.q_urgent <= 1.0, "regulation.q_urgent must be in [0, 1]");

  const auto& s = c.solver;
  require(s.xi > 0.0 && s.zeta > 0.0 && s.q0 > 0.0 && s.delta0 > 0.0, "solver weights and thresholds must be positive");
  require(s.k_min >= 1, "solver.k_min must be at least 1");
  require(s.exact_max_vehicles >= 1 && s.exact_max_vehicles <= 12, "solver.exact_max_vehicles must be in [1, 12]");
  require(s.exact_time_budget_s > 0.0, "solver.exact_time_budget_s must be positive");
  require(s.enumeration_max_links >= 0 && s.enumeration_max_links <= 24,
          "solver.enumeration_max_links must be in [0, 24]");
  require(s.lifetime_min_cycles >= 1, "solver.lifetime_min_cycles must be at least 1");
  require(s.lifetime_horizon_cycles >= s.lifetime_min_cycles,
          "solver.lifetime_horizon_cycles must be at least lifetime_min_cycles");
  require(s.utility_adaptability >= 0.0 && s.utility_demand >= 0.0 && s.utility_distance >= 0.0,
          "solver utility weights must be non-negative");

  require(c.motif.heading_tolerance_rad > 0.0, "motif.heading_tolerance_deg must be positive");
  require(c.warmup_steps >= 0, "experiment.warmup_steps must be non-negative");
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [k, v] : registry()) out.push_back(k);
  return out;
}

}  // namespace vanet
