#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "vanet/netgraph.hpp"

namespace vanet {

/// [pos_x m, pos_y m, speed m/s, heading rad, demand intensity]
using FeatureVector = std::array<double, 5>;

enum FeatureIndex : std::size_t { kFeatX = 0, kFeatY = 1, kFeatSpeed = 2, kFeatHeading = 3, kFeatDemand = 4 };

/// One row per node: vehicles first (snapshot order), then RSUs.
struct FeatureMatrix {
  std::vector<std::string> ids;
  std::vector<FeatureVector> rows;
  int vehicle_count = 0;

  std::size_t size() const { return rows.size(); }
  bool is_rsu(std::size_t row) const { return static_cast<int>(row) >= vehicle_count; }
};

struct FusionParams {
  double decay_lambda = 0.01;  // 1/m
  double self_weight_vehicle = 0.7;
  double self_weight_rsu = 0.3;
  int max_rounds = 10;
  double epsilon = 1e-3;
};

struct Neighbor {
  int node = 0;
  double distance = 0.0;
};

using Neighborhoods = std::vector<std::vector<Neighbor>>;

/// Vehicles within `v2v_range_m` of each other and vehicle/RSU pairs within
/// `v2i_range_m` are neighbours. Lists are in node-index order.
Neighborhoods build_neighborhoods(const Network& network, double v2v_range_m, double v2i_range_m);

/// Vehicle rows carry [x, y, s, theta, d_n] with d_n the column mean of the
/// demand matrix. RSU rows carry [x, y, 0, 0, d_r] with d_r the mean d_n of
/// vehicles within `rsu_coverage_m` (0 when none).
/// Throws ShapeError if the demand size differs from the vehicle count.
FeatureMatrix extract_features(const NetworkSnapshot& snapshot, const DemandMatrix& demand, double rsu_coverage_m);

/// Distance-decay softmax: exp(-lambda d_u) / sum_i exp(-lambda d_i).
std::vector<double> neighbor_weights(std::span<const double> distances, double decay_lambda);

/// One synchronous round of neighbourhood aggregation and self blending.
/// Headings are blended on the unit circle. Isolated nodes are unchanged.
/// `max_change`, when given, receives the largest per-node feature change.
FeatureMatrix fuse_step(const FeatureMatrix& features, const Neighborhoods& neighborhoods, const FusionParams& params,
                        double* max_change = nullptr);

/// Distance between two feature vectors; the heading term is the wrapped
/// angular difference.
double feature_distance(const FeatureVector& a, const FeatureVector& b);

struct FusionResult {
  FeatureMatrix fused;
  int rounds_used = 0;
  bool converged = false;
  std::vector<double> max_changes;  // one entry per round
};

/// Repeats fuse_step until the largest per-node change drops below epsilon
/// or max_rounds rounds have run.
FusionResult run_fusion(const FeatureMatrix& initial, const Neighborhoods& neighborhoods, const FusionParams& params);

FusionResult run_fusion(const Network& network, const DemandMatrix& demand, const Neighborhoods& neighborhoods,
                        const FusionParams& params, double rsu_coverage_m);

}  // namespace vanet
