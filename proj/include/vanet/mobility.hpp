#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace vanet {

struct VehicleState {
  std::string id;
  double x = 0.0;  // m
  double y = 0.0;  // m
  double speed = 0.0;    // m/s, >= 0
  double heading = 0.0;  // rad, counterclockwise from east, [0, 2pi)

  bool operator==(const VehicleState&) const = default;
};

struct RsuNode {
  std::string id;
  double x = 0.0;
  double y = 0.0;
  double bandwidth_capacity = 100.0;  // Mbps

  bool operator==(const RsuNode&) const = default;
};

/// Positions and kinematics of every node at one control step.
/// Vehicles are sorted by id; RSUs are identical for every snapshot of a run.
struct NetworkSnapshot {
  std::int64_t step = 0;
  double time_s = 0.0;
  double step_s = 1.0;
  std::vector<VehicleState> vehicles;
  std::vector<RsuNode> rsus;

  bool operator==(const NetworkSnapshot&) const = default;
};

struct SceneBounds {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  bool contains(double x, double y) const {
    return x >= min_x && x <= max_x && y >= min_y && y <= max_y;
  }
};

// ---------------------------------------------------------------------------
// Trace ingest

enum class TraceFormat { fcd_xml, csv };

/// Parses a floating-car-data trace. One snapshot per distinct timestep, in
/// increasing time order, vehicles sorted by id; RSU lists are left empty.
///
/// FCD XML uses `timestep@time` / `vehicle@id,x,y,speed,angle` where angle is
/// degrees clockwise from north. Geo traces (`lon`/`lat` instead of `x`/`y`)
/// are projected onto a local tangent plane anchored at the trace centroid.
///
/// Throws ParseError, OrderingError or FieldError.
std::vector<NetworkSnapshot> parse_fcd_trace(std::istream& in, TraceFormat format);

/// Writes snapshots in the CSV trace format
/// (`time,id,x,y,speed,heading_rad`; 3 decimals for positions, 2 for
/// speed and heading).
void write_csv_trace(std::ostream& out, const std::vector<NetworkSnapshot>& snapshots);

// ---------------------------------------------------------------------------
// Synthetic grid mobility

struct SyntheticMobilityConfig {
  int grid_columns = 4;             // intersections along x
  int grid_rows = 4;                // intersections along y
  double block_length_m = 400.0;    // spacing between adjacent intersections
  double speed_limit_mps = 13.9;
  double arterial_speed_limit_mps = 0.0;  // middle row/column roads; 0 = same as speed_limit_mps
  double min_speed_factor = 0.6;    // desired speed drawn in [factor, 1] x limit
  double max_accel_mps2 = 2.0;
  double max_decel_mps2 = 4.5;
  double speed_change_prob = 0.05;  // per step chance to redraw desired speed
  double turn_left_prob = 0.25;
  double turn_right_prob = 0.25;
  double spawn_rate_per_s = 0.5;    // vehicles entering per second
  double spawn_rate_end_per_s = -1.0;  // linear ramp target at the last step; < 0 = constant
  double mean_trip_s = 120.0;       // exponential trip duration
  double step_s = 1.0;
  int steps = 500;                  // number of snapshots produced is steps + 1
};

/// Deterministic grid mobility. Vehicles follow grid edges, turn at
/// intersections with the configured probabilities, accelerate within the
/// configured bounds and leave when their trip duration expires. The network
/// starts at the steady-state population (spawn rate x mean trip).
/// Throws ConfigError on a zero-area grid or non-positive step duration.
std::vector<NetworkSnapshot> generate_synthetic(const SyntheticMobilityConfig& config, std::uint64_t seed);

/// Scene rectangle spanned by the grid road network.
SceneBounds grid_bounds(const SyntheticMobilityConfig& config);

// ---------------------------------------------------------------------------
// RSU placement

enum class RsuPlacement { grid, manual };

struct RsuPosition {
  double x = 0.0;
  double y = 0.0;
};

/// `grid` lays RSUs at cell centres of a near-square lattice over the scene;
/// `manual` echoes `positions` (throws PlacementError when one lies outside
/// `bounds`).
std::vector<RsuNode> place_rsus(const SceneBounds& bounds, int count, RsuPlacement strategy,
                                const std::vector<RsuPosition>& positions = {},
                                double bandwidth_capacity_mbps = 100.0);

/// Replaces `rsus` in every snapshot.
void attach_rsus(std::vector<NetworkSnapshot>& snapshots, const std::vector<RsuNode>& rsus);

}  // namespace vanet
