#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vanet/baselines.hpp"
#include "vanet/fusion.hpp"
#include "vanet/metrics.hpp"
#include "vanet/mobility.hpp"
#include "vanet/netgraph.hpp"
#include "vanet/optimizer.hpp"
#include "vanet/regulation.hpp"

namespace vanet {

enum class Algorithm { hierarchical, greedy, shortest_path, motif };

const char* to_string(Algorithm algorithm);
/// Throws ConfigError for unknown names.
Algorithm parse_algorithm(const std::string& name);
inline constexpr Algorithm kAllAlgorithms[] = {Algorithm::hierarchical, Algorithm::greedy, Algorithm::shortest_path,
                                               Algorithm::motif};

enum class ScenarioSource { synthetic, trace };

struct ExperimentConfig {
  // [scenario]
  ScenarioSource source = ScenarioSource::synthetic;
  std::filesystem::path trace_path;
  TraceFormat trace_format = TraceFormat::csv;
  int steps = 500;
  std::uint64_t seed = 42;

  SyntheticMobilityConfig mobility;  // [mobility]; steps and step_s follow [scenario]

  // [rsu]
  int rsu_count = 4;
  RsuPlacement rsu_placement = RsuPlacement::grid;
  std::vector<RsuPosition> rsu_positions;
  double rsu_bandwidth_mbps = 100.0;
  // Scene used for grid placement on traces; defaults to the trace's bounding box.
  std::optional<SceneBounds> scene;

  LinkLimits limits;           // [links]
  double alpha = 0.7;          // [links]
  double r_th = 0.7;           // [links]
  DemandParams demand;         // [demand]
  double demand_threshold = 0.3;
  MetricParams metrics;        // [metrics]
  FusionParams fusion;         // [fusion]
  RegulationParams regulation; // [regulation]
  double q_urgent = 0.5;
  SolverParams solver;         // [solver]
  MotifParams motif;           // [motif]

  // [experiment]
  Algorithm algorithm = Algorithm::hierarchical;
  int warmup_steps = 50;
  std::filesystem::path output_dir = "out";
};

/// Sectioned `key = value` text: `[section]` headers, `#` or `;` comments.
/// Returns section -> key -> (value, line). Throws ConfigError on malformed
/// lines and duplicate keys.
struct IniValue {
  std::string value;
  std::size_t line = 0;
};
using IniDocument = std::map<std::string, std::map<std::string, IniValue>>;
IniDocument parse_ini(std::istream& in);

/// Builds and validates a config; relative paths resolve against `base_dir`.
/// Unknown sections or keys and out-of-range values throw ConfigError.
ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError naming the first invalid setting.
void validate(const ExperimentConfig& config);

/// Every recognised `section.key`, for documentation and tests.
std::vector<std::string> config_keys();

}  // namespace vanet
