#include "vanet/mobility.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "vanet/errors.hpp"
#include "vanet/geometry.hpp"

namespace vanet {

namespace {

constexpr double kEarthRadiusM = 6371008.8;

bool parse_double(std::string_view text, double& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

/// Heading in radians counterclockwise from east, from SUMO's degrees
/// clockwise from north.
double heading_from_compass(double degrees) {
  return normalize_heading((90.0 - degrees) * std::numbers::pi / 180.0);
}

struct RawRecord {
  std::string id;
  double x = 0.0;
  double y = 0.0;
  double speed = 0.0;
  double heading = 0.0;
};

struct RawStep {
  double time = 0.0;
  std::vector<RawRecord> records;
};

std::vector<NetworkSnapshot> assemble(std::vector<RawStep> steps) {
  std::vector<NetworkSnapshot> out;
  out.reserve(steps.size());
  for (std::size_t k = 0; k < steps.size(); ++k) {
    NetworkSnapshot snap;
    snap.step = static_cast<std::int64_t>(k);
    snap.time_s = steps[k].time;
    if (steps.size() == 1) {
      snap.step_s = 1.0;
    } else if (k + 1 < steps.size()) {
      snap.step_s = steps[k + 1].time - steps[k].time;
    } else {
      snap.step_s = steps[k].time - steps[k - 1].time;
    }
    auto& recs = steps[k].records;
    std::sort(recs.begin(), recs.end(), [](const RawRecord& a, const RawRecord& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < recs.size(); ++i) {
      if (recs[i].id == recs[i - 1].id) {
        throw ParseError("duplicate vehicle id '" + recs[i].id + "' at time " + std::to_string(steps[k].time), 0);
      }
    }
    snap.vehicles.reserve(recs.size());
    for (auto& r : recs) {
      snap.vehicles.push_back({std::move(r.id), r.x, r.y, std::max(0.0, r.speed), normalize_heading(r.heading)});
    }
    out.push_back(std::move(snap));
  }
  return out;
}

std::vector<NetworkSnapshot> parse_xml(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError(e.message(), e.line());
  }

  const pt::ptree* root = nullptr;
  for (const auto& [name, child] : tree) {
    if (name != "<xmlcomment>" && name != "<xmlattr>") {
      root = &child;
      break;
    }
  }
  if (root == nullptr) throw ParseError("document has no root element", 0);

  struct GeoRecord {
    std::size_t step;
    std::size_t index;
    bool geo;
  };
  std::vector<RawStep> steps;
  bool any_geo = false;
  bool any_plane = false;
  std::size_t step_ordinal = 0;
  for (const auto& [name, ts] : *root) {
    if (name != "timestep") continue;
    ++step_ordinal;
    const std::string where = "timestep " + std::to_string(step_ordinal);
    RawStep step;
    auto time = ts.get_optional<std::string>("<xmlattr>.time");
    if (!time || !parse_double(*time, step.time)) throw FieldError("time", where);
    if (!steps.empty() && step.time <= steps.back().time) {
      throw OrderingError(where + ": time " + *time + " does not follow " + std::to_string(steps.back().time));
    }
    std::size_t veh_ordinal = 0;
    for (const auto& [vname, v] : ts) {
      if (vname != "vehicle") continue;
      ++veh_ordinal;
      const std::string vwhere = where + " vehicle " + std::to_string(veh_ordinal);
      auto attr = [&](const char* key) { return v.get_optional<std::string>(std::string("<xmlattr>.") + key); };
      RawRecord rec;
      auto id = attr("id");
      if (!id || id->empty()) throw FieldError("id", vwhere);
      rec.id = *id;
      auto read_num = [&](const char* key, double& dst) {
        auto val = attr(key);
        if (!val || !parse_double(*val, dst)) throw FieldError(key, vwhere);
      };
      const bool geo = !attr("x") && attr("lon");
      if (geo) {
        read_num("lon", rec.x);
        read_num("lat", rec.y);
        any_geo = true;
      } else {
        read_num("x", rec.x);
        read_num("y", rec.y);
        any_plane = true;
      }
      read_num("speed", rec.speed);
      double angle = 0.0;
      read_num("angle", angle);
      rec.heading = heading_from_compass(angle);
      step.records.push_back(std::move(rec));
    }
    steps.push_back(std::move(step));
  }
  if (any_geo && any_plane) throw ParseError("trace mixes x/y and lon/lat coordinates", 0);

  if (any_geo) {
    double lon0 = 0.0;
    double lat0 = 0.0;
    std::size_t count = 0;
    for (const auto& s : steps) {
      for (const auto& r : s.records) {
        lon0 += r.x;
        lat0 += r.y;
        ++count;
      }
    }
    lon0 /= static_cast<double>(count);
    lat0 /= static_cast<double>(count);
    const double deg = std::numbers::pi / 180.0;
    const double coslat = std::cos(lat0 * deg);
    for (auto& s : steps) {
      for (auto& r : s.records) {
        const double x = kEarthRadiusM * (r.x - lon0) * deg * coslat;
        const double y = kEarthRadiusM * (r.y - lat0) * deg;
        r.x = x;
        r.y = y;
      }
    }
  }
  return assemble(std::move(steps));
}

std::vector<NetworkSnapshot> parse_csv(std::istream& in) {
  static constexpr std::array<const char*, 6> kColumns = {"time", "id", "x", "y", "speed", "heading_rad"};
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("empty document, expected CSV header", 1);
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "time,id,x,y,speed,heading_rad") {
    throw ParseError("unexpected header '" + line + "', expected 'time,id,x,y,speed,heading_rad'", line_no);
  }

  std::vector<RawStep> steps;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() > kColumns.size()) {
      throw ParseError("expected 6 fields, found " + std::to_string(fields.size()), line_no);
    }
    const std::string where = "line " + std::to_string(line_no);
    for (std::size_t i = 0; i < kColumns.size(); ++i) {
      if (i >= fields.size() || fields[i].empty()) throw FieldError(kColumns[i], where);
    }
    RawRecord rec;
    double time = 0.0;
    if (!parse_double(fields[0], time)) throw ParseError("invalid number in field 'time'", line_no);
    rec.id = std::string(fields[1]);
    double* targets[] = {&rec.x, &rec.y, &rec.speed, &rec.heading};
    for (std::size_t i = 2; i < 6; ++i) {
      if (!parse_double(fields[i], *targets[i - 2])) {
        throw ParseError(std::string("invalid number in field '") + kColumns[i] + "'", line_no);
      }
    }
    if (steps.empty() || time != steps.back().time) {
      if (!steps.empty() && time < steps.back().time) {
        throw OrderingError(where + ": time " + std::string(fields[0]) + " precedes " + std::to_string(steps.back().time));
      }
      for (const auto& s : steps) {
        if (s.time == time) throw OrderingError(where + ": timestep " + std::string(fields[0]) + " is not contiguous");
      }
      steps.push_back({time, {}});
    }
    steps.back().records.push_back(std::move(rec));
  }
  return assemble(std::move(steps));
}

// --- synthetic grid -----------------------------------------------------------

enum Direction : int { kEast = 0, kNorth = 1, kWest = 2, kSouth = 3 };
constexpr std::array<int, 4> kDx = {1, 0, -1, 0};
constexpr std::array<int, 4> kDy = {0, 1, 0, -1};

struct GridVehicle {
  std::string id;
  int node_x = 0;  // intersection the current edge starts from
  int node_y = 0;
  int dir = kEast;
  double offset = 0.0;  // metres travelled along the edge
  double speed = 0.0;
  double desired = 0.0;
  double remaining_s = 0.0;
};

class GridWorld {
 public:
  GridWorld(const SyntheticMobilityConfig& cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) {
    for (int x = 0; x < cfg.grid_columns; ++x) {
      for (int y = 0; y < cfg.grid_rows; ++y) {
        for (int d = 0; d < 4; ++d) {
          if (valid(x, y, d)) edges_.push_back({x, y, d});
        }
      }
    }
  }

  void spawn(int count) {
    std::uniform_int_distribution<std::size_t> pick(0, edges_.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::exponential_distribution<double> trip(1.0 / cfg_.mean_trip_s);
    for (int i = 0; i < count; ++i) {
      const auto& e = edges_[pick(rng_)];
      GridVehicle v;
      char buf[32];
      std::snprintf(buf, sizeof(buf), "veh%06d", next_id_++);
      v.id = buf;
      v.node_x = e[0];
      v.node_y = e[1];
      v.dir = e[2];
      v.offset = unit(rng_) * cfg_.block_length_m;
      v.desired = draw_desired();
      v.speed = v.desired;
      v.remaining_s = trip(rng_);
      vehicles_.push_back(std::move(v));
    }
  }

  void advance() {
    const double dt = cfg_.step_s;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<GridVehicle> kept;
    kept.reserve(vehicles_.size());
    for (auto& v : vehicles_) {
      v.remaining_s -= dt;
      if (v.remaining_s <= 0.0) continue;
      if (unit(rng_) < cfg_.speed_change_prob) v.desired = draw_desired();
      if (v.speed < v.desired) {
        v.speed = std::min(v.desired, v.speed + cfg_.max_accel_mps2 * dt);
      } else {
        v.speed = std::max(v.desired, v.speed - cfg_.max_decel_mps2 * dt);
      }
      v.speed = std::clamp(v.speed, 0.0, cfg_.speed_limit_mps);
      v.offset += v.speed * dt;
      while (v.offset >= cfg_.block_length_m) {
        v.offset -= cfg_.block_length_m;
        v.node_x += kDx[v.dir];
        v.node_y += kDy[v.dir];
        v.dir = choose_turn(v.node_x, v.node_y, v.dir);
      }
      kept.push_back(std::move(v));
    }
    vehicles_ = std::move(kept);
  }

  NetworkSnapshot snapshot(std::int64_t step) const {
    NetworkSnapshot snap;
    snap.step = step;
    snap.step_s = cfg_.step_s;
    snap.time_s = static_cast<double>(step) * cfg_.step_s;
    snap.vehicles.reserve(vehicles_.size());
    for (const auto& v : vehicles_) {
      const double x = v.node_x * cfg_.block_length_m + kDx[v.dir] * v.offset;
      const double y = v.node_y * cfg_.block_length_m + kDy[v.dir] * v.offset;
      snap.vehicles.push_back({v.id, x, y, v.speed, normalize_heading(v.dir * std::numbers::pi / 2.0)});
    }
    std::sort(snap.vehicles.begin(), snap.vehicles.end(),
              [](const VehicleState& a, const VehicleState& b) { return a.id < b.id; });
    return snap;
  }

  int draw_spawn_count(double rate_per_s) {
    if (rate_per_s <= 0.0) return 0;
    std::poisson_distribution<int> poisson(rate_per_s * cfg_.step_s);
    return poisson(rng_);
  }

 private:
  bool valid(int x, int y, int d) const {
    const int nx = x + kDx[d];
    const int ny = y + kDy[d];
    return nx >= 0 && ny >= 0 && nx < cfg_.grid_columns && ny < cfg_.grid_rows;
  }

  double draw_desired() {
    std::uniform_real_distribution<double> factor(cfg_.min_speed_factor, 1.0);
    return factor(rng_) * cfg_.speed_limit_mps;
  }

  int choose_turn(int x, int y, int dir) {
    const int left = (dir + 1) % 4;
    const int right = (dir + 3) % 4;
    const double straight_p = std::max(0.0, 1.0 - cfg_.turn_left_prob - cfg_.turn_right_prob);
    std::array<std::pair<int, double>, 3> options = {
        std::pair{dir, straight_p}, std::pair{left, cfg_.turn_left_prob}, std::pair{right, cfg_.turn_right_prob}};
    double total = 0.0;
    for (auto& [d, p] : options) {
      if (!valid(x, y, d)) p = 0.0;
      total += p;
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng_);
    if (total <= 0.0) {
      // Dead end for every allowed move: take any valid exit, U-turn last.
      for (int d : {dir, left, right, (dir + 2) % 4}) {
        if (valid(x, y, d)) return d;
      }
      return dir;
    }
    double acc = 0.0;
    for (const auto& [d, p] : options) {
      acc += p / total;
      if (p > 0.0 && u < acc) return d;
    }
    for (auto it = options.rbegin(); it != options.rend(); ++it) {
      if (it->second > 0.0) return it->first;
    }
    return dir;
  }

  const SyntheticMobilityConfig& cfg_;
  std::mt19937_64 rng_;
  std::vector<std::array<int, 3>> edges_;
  std::vector<GridVehicle> vehicles_;
  int next_id_ = 0;
};

void validate(const SyntheticMobilityConfig& c) {
  if (!(c.block_length_m > 0.0) || c.grid_columns < 2 || c.grid_rows < 2) {
    throw ConfigError("zero-area grid: need at least 2x2 intersections and a positive block length");
  }
  if (!(c.step_s > 0.0)) throw ConfigError("step duration must be positive");
  if (c.steps < 0) throw ConfigError("steps must be non-negative");
  if (!(c.speed_limit_mps > 0.0)) throw ConfigError("speed limit must be positive");
  if (c.min_speed_factor < 0.0 || c.min_speed_factor > 1.0) throw ConfigError("min_speed_factor must lie in [0, 1]");
  if (c.max_accel_mps2 <= 0.0 || c.max_decel_mps2 <= 0.0) throw ConfigError("acceleration bounds must be positive");
  if (c.turn_left_prob < 0.0 || c.turn_right_prob < 0.0 || c.turn_left_prob + c.turn_right_prob > 1.0) {
    throw ConfigError("turn probabilities must be non-negative and sum to at most 1");
  }
  if (c.spawn_rate_per_s < 0.0) throw ConfigError("spawn rate must be non-negative");
  if (!(c.mean_trip_s > 0.0)) throw ConfigError("mean trip duration must be positive");
  if (c.speed_change_prob < 0.0 || c.speed_change_prob > 1.0) throw ConfigError("speed_change_prob must lie in [0, 1]");
}

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  std::string s(buf);
  if (s == "-0" || s.rfind("-0.", 0) == 0) {
    // Avoid emitting negative zero after rounding.
    bool all_zero = std::all_of(s.begin() + 1, s.end(), [](char c) { return c == '0' || c == '.'; });
    if (all_zero) s.erase(0, 1);
  }
  return s;
}

}  // namespace

std::vector<NetworkSnapshot> parse_fcd_trace(std::istream& in, TraceFormat format) {
  return format == TraceFormat::fcd_xml ? parse_xml(in) : parse_csv(in);
}

void write_csv_trace(std::ostream& out, const std::vector<NetworkSnapshot>& snapshots) {
  out << "time,id,x,y,speed,heading_rad\n";
  for (const auto& snap : snapshots) {
    const std::string time = format_fixed(snap.time_s, 3);
    for (const auto& v : snap.vehicles) {
      out << time << ',' << v.id << ',' << format_fixed(v.x, 3) << ',' << format_fixed(v.y, 3) << ','
          << format_fixed(v.speed, 2) << ',' << format_fixed(v.heading, 2) << '\n';
    }
  }
}

SceneBounds grid_bounds(const SyntheticMobilityConfig& config) {
  return {0.0, 0.0, (config.grid_columns - 1) * config.block_length_m, (config.grid_rows - 1) * config.block_length_m};
}

std::vector<NetworkSnapshot> generate_synthetic(const SyntheticMobilityConfig& config, std::uint64_t seed) {
  validate(config);
  GridWorld world(config, seed);
  const double rate_end = config.spawn_rate_end_per_s < 0.0 ? config.spawn_rate_per_s : config.spawn_rate_end_per_s;
  world.spawn(static_cast<int>(std::lround(config.spawn_rate_per_s * config.mean_trip_s)));

  std::vector<NetworkSnapshot> out;
  out.reserve(static_cast<std::size_t>(config.steps) + 1);
  out.push_back(world.snapshot(0));
  for (int k = 1; k <= config.steps; ++k) {
    world.advance();
    const double frac = config.steps > 0 ? static_cast<double>(k) / config.steps : 0.0;
    const double rate = config.spawn_rate_per_s + (rate_end - config.spawn_rate_per_s) * frac;
    world.spawn(world.draw_spawn_count(rate));
    out.push_back(world.snapshot(k));
  }
  return out;
}

std::vector<RsuNode> place_rsus(const SceneBounds& bounds, int count, RsuPlacement strategy,
                                const std::vector<RsuPosition>& positions, double bandwidth_capacity_mbps) {
  if (!(bandwidth_capacity_mbps > 0.0)) throw PlacementError("RSU bandwidth capacity must be positive");
  std::vector<RsuNode> out;
  auto make_id = [](std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "rsu%03zu", i);
    return std::string(buf);
  };
  if (strategy == RsuPlacement::manual) {
    for (std::size_t i = 0; i < positions.size(); ++i) {
      const auto& p = positions[i];
      if (!bounds.contains(p.x, p.y)) {
        throw PlacementError("RSU " + std::to_string(i) + " at (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                             ") lies outside the scene bounds");
      }
      out.push_back({make_id(i), p.x, p.y, bandwidth_capacity_mbps});
    }
    return out;
  }
  if (count < 0) throw PlacementError("RSU count must be non-negative");
  if (count == 0) return out;
  // Near-square lattice whose aspect follows the scene.
  const double aspect = bounds.height() > 0.0 ? bounds.width() / bounds.height() : 1.0;
  int cols = std::max(1, static_cast<int>(std::lround(std::sqrt(count * aspect))));
  cols = std::min(cols, count);
  const int rows = (count + cols - 1) / cols;
  std::size_t placed = 0;
  for (int r = 0; r < rows && placed < static_cast<std::size_t>(count); ++r) {
    const int in_row = std::min(cols, count - r * cols);
    for (int c = 0; c < in_row; ++c) {
      const double x = bounds.min_x + bounds.width() * (c + 0.5) / in_row;
      const double y = bounds.min_y + bounds.height() * (r + 0.5) / rows;
      out.push_back({make_id(placed), x, y, bandwidth_capacity_mbps});
      ++placed;
    }
  }
  return out;
}

void attach_rsus(std::vector<NetworkSnapshot>& snapshots, const std::vector<RsuNode>& rsus) {
  for (auto& s : snapshots) s.rsus = rsus;
}

}  // namespace vanet
