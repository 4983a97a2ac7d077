#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vanet/netgraph.hpp"

namespace vanet {

/// Queueing and transmission constants of the delay model.
struct DelayParams {
  double k_v = 1.0;
  double k_i = 1.0;
  double tau_v_s = 0.5e-3;
  double tau_i_s = 0.1e-3;
  double packet_bits = 8000.0;
};

struct ThroughputParams {
  double eta_v = 0.8;
  double eta_i = 0.9;
  double p_loss_per_hop = 0.03;
};

/// V2V links share `v2v_base_mbps` by the busier endpoint's V2V degree; V2I
/// links carry their allocated bandwidth.
struct BandwidthModel {
  double v2v_base_mbps = 20.0;
};

struct MetricParams {
  DelayParams delay;
  ThroughputParams throughput;
  BandwidthModel bandwidth;
};

/// Available bandwidth of an active link in Mbps.
double link_bandwidth_mbps(const Topology& topology, const Link& link, const BandwidthModel& model);

/// End-to-end delay of a node path in seconds: queueing at every vehicle
/// except the destination and at every RSU, plus per-link transmission
/// delay. Throws InvalidPathError when consecutive nodes are not linked.
double path_delay(const Topology& topology, std::span<const int> path, const DelayParams& delay,
                  const BandwidthModel& bandwidth);

struct PairMeasurement {
  int hops = -1;  // -1 when unreachable
  double delay_s = 0.0;
};

/// Per-pair shortest-hop measurements and their means over connected pairs.
struct PairEvaluation {
  std::vector<PairMeasurement> pairs;
  double l_avg = 0.0;
  double mean_delay_s = 0.0;
  int connected = 0;
  int max_hops = 0;
};

PairEvaluation evaluate_pairs(const Topology& topology, const CommPairSet& pairs, const DelayParams& delay,
                              const BandwidthModel& bandwidth);

/// Mean shortest-hop count over connected pairs; 0 when none is connected.
double average_path_length(const Topology& topology, const CommPairSet& pairs);

/// Mean delay of each connected pair's shortest-hop path; 0 when none is connected.
double mean_delay(const Topology& topology, const CommPairSet& pairs, const DelayParams& delay,
                  const BandwidthModel& bandwidth);

/// (W_V + W_I) * (1 - rho_loss) in Mbps with rho_loss = p * l_avg clamped to [0, 1).
/// Every undirected link is counted once.
double throughput(const Topology& topology, const ThroughputParams& params, const BandwidthModel& bandwidth,
                  double l_avg);

struct MetricsRecord {
  std::int64_t step = 0;
  double l_avg = 0.0;
  double mean_delay_s = 0.0;
  double throughput_mbps = 0.0;
  double connectivity_rate = 0.0;
  std::size_t pair_count = 0;
};

/// Everything measured on one topology: the record plus the raw values the
/// regulation state consumes.
struct StepMeasurement {
  MetricsRecord record;
  PairEvaluation pairs;
  GraphStats stats;
};

StepMeasurement measure(const Topology& topology, const CommPairSet& pairs, const MetricParams& params);

}  // namespace vanet
