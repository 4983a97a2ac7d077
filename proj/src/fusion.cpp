#include "vanet/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "vanet/errors.hpp"
#include "vanet/geometry.hpp"

namespace vanet {

Neighborhoods build_neighborhoods(const Network& network, double v2v_range_m, double v2i_range_m) {
  const int n = network.node_count();
  const int nv = network.vehicle_count();
  Neighborhoods out(n);
  for (int a = 0; a < nv; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const double d = network.distance(a, b);
      const double range = network.is_rsu(b) ? v2i_range_m : v2v_range_m;
      if (d > range) continue;
      out[a].push_back({b, d});
      out[b].push_back({a, d});
    }
  }
  for (auto& list : out) {
    std::sort(list.begin(), list.end(), [](const Neighbor& x, const Neighbor& y) { return x.node < y.node; });
  }
  return out;
}

FeatureMatrix extract_features(const NetworkSnapshot& snapshot, const DemandMatrix& demand, double rsu_coverage_m) {
  const int nv = static_cast<int>(snapshot.vehicles.size());
  if (demand.size() != nv) {
    throw ShapeError("demand matrix is " + std::to_string(demand.size()) + "x" + std::to_string(demand.size()) +
                     " but the snapshot has " + std::to_string(nv) + " vehicles");
  }
  FeatureMatrix m;
  m.vehicle_count = nv;
  std::vector<double> column_mean(nv, 0.0);
  for (int n = 0; n < nv; ++n) {
    double sum = 0.0;
    for (int i = 0; i < nv; ++i) sum += demand(i, n);
    column_mean[n] = sum / nv;
  }
  for (int n = 0; n < nv; ++n) {
    const auto& v = snapshot.vehicles[n];
    m.ids.push_back(v.id);
    m.rows.push_back({v.x, v.y, v.speed, v.heading, column_mean[n]});
  }
  for (const auto& r : snapshot.rsus) {
    double sum = 0.0;
    int count = 0;
    for (int n = 0; n < nv; ++n) {
      const auto& v = snapshot.vehicles[n];
      if (distance(v.x, v.y, r.x, r.y) <= rsu_coverage_m) {
        sum += column_mean[n];
        ++count;
      }
    }
    m.ids.push_back(r.id);
    m.rows.push_back({r.x, r.y, 0.0, 0.0, count > 0 ? sum / count : 0.0});
  }
  return m;
}

std::vector<double> neighbor_weights(std::span<const double> distances, double decay_lambda) {
  std::vector<double> w(distances.size());
  if (distances.empty()) return w;
  // Shifting by the nearest distance leaves the softmax unchanged and keeps exp() in range.
  const double nearest = *std::min_element(distances.begin(), distances.end());
  double total = 0.0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    w[i] = std::exp(-decay_lambda * (distances[i] - nearest));
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

double feature_distance(const FeatureVector& a, const FeatureVector& b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = k == kFeatHeading ? heading_difference(a[k], b[k]) : a[k] - b[k];
    sum += d * d;
  }
  return std::sqrt(sum);
}

FeatureMatrix fuse_step(const FeatureMatrix& features, const Neighborhoods& neighborhoods, const FusionParams& params,
                        double* max_change) {
  if (neighborhoods.size() != features.size()) throw ShapeError("neighbourhood count does not match feature rows");
  FeatureMatrix next = features;
  double worst = 0.0;
  std::vector<double> dists;
  for (std::size_t n = 0; n < features.size(); ++n) {
    const auto& hood = neighborhoods[n];
    if (hood.empty()) continue;
    dists.clear();
    for (const auto& nb : hood) dists.push_back(nb.distance);
    const auto w = neighbor_weights(dists, params.decay_lambda);
    const double self = features.is_rsu(n) ? params.self_weight_rsu : params.self_weight_vehicle;
    const FeatureVector& own = features.rows[n];
    if (self == 1.0) continue;  // exact fixed point; atan2 would round the heading

    FeatureVector agg{};
    double agg_cos = 0.0;
    double agg_sin = 0.0;
    FeatureVector lo = own;
    FeatureVector hi = own;
    bool same_heading = true;
    for (std::size_t i = 0; i < hood.size(); ++i) {
      const FeatureVector& other = features.rows[hood[i].node];
      for (std::size_t k = 0; k < other.size(); ++k) {
        agg[k] += w[i] * other[k];
        lo[k] = std::min(lo[k], other[k]);
        hi[k] = std::max(hi[k], other[k]);
      }
      agg_cos += w[i] * std::cos(other[kFeatHeading]);
      agg_sin += w[i] * std::sin(other[kFeatHeading]);
      same_heading = same_heading && other[kFeatHeading] == own[kFeatHeading];
    }

    FeatureVector out{};
    for (std::size_t k = 0; k < out.size(); ++k) {
      if (k == kFeatHeading) continue;
      // Convex blend; the clamp only absorbs rounding.
      out[k] = std::clamp(self * own[k] + (1.0 - self) * agg[k], lo[k], hi[k]);
    }
    if (same_heading) {
      out[kFeatHeading] = own[kFeatHeading];
    } else {
      const double c = self * std::cos(own[kFeatHeading]) + (1.0 - self) * agg_cos;
      const double s = self * std::sin(own[kFeatHeading]) + (1.0 - self) * agg_sin;
      out[kFeatHeading] = (c == 0.0 && s == 0.0) ? own[kFeatHeading] : normalize_heading(std::atan2(s, c));
    }
    worst = std::max(worst, feature_distance(out, own));
    next.rows[n] = out;
  }
  if (max_change) *max_change = worst;
  return next;
}

FusionResult run_fusion(const FeatureMatrix& initial, const Neighborhoods& neighborhoods, const FusionParams& params) {
  FusionResult result;
  result.fused = initial;
  const int rounds = std::max(1, params.max_rounds);
  for (int r = 0; r < rounds; ++r) {
    double change = 0.0;
    result.fused = fuse_step(result.fused, neighborhoods, params, &change);
    ++result.rounds_used;
    result.max_changes.push_back(change);
    if (change < params.epsilon) {
      result.converged = true;
      break;
    }
  }
  return result;
}

FusionResult run_fusion(const Network& network, const DemandMatrix& demand, const Neighborhoods& neighborhoods,
                        const FusionParams& params, double rsu_coverage_m) {
  return run_fusion(extract_features(network.snapshot(), demand, rsu_coverage_m), neighborhoods, params);
}

}  // namespace vanet
