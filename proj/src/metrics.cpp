#include "vanet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "vanet/errors.hpp"

namespace vanet {

double link_bandwidth_mbps(const Topology& topology, const Link& link, const BandwidthModel& model) {
  if (link.kind == LinkKind::v2i) return link.allocated_mbps;
  const int busier = std::max({topology.v2v_degree(link.a), topology.v2v_degree(link.b), 1});
  return model.v2v_base_mbps / busier;
}

double path_delay(const Topology& topology, std::span<const int> path, const DelayParams& delay,
                  const BandwidthModel& bandwidth) {
  const auto& net = topology.network();
  double total = 0.0;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const int node = path[i];
    if (node < 0 || node >= net.node_count()) throw InvalidPathError("path names an unknown node");
    const bool last = i + 1 == path.size();
    if (net.is_rsu(node)) {
      total += delay.k_i * topology.degree(node) * delay.tau_i_s;
    } else if (!last) {
      total += delay.k_v * topology.degree(node) * delay.tau_v_s;
    }
    if (!last) {
      auto link = topology.find_link(node, path[i + 1]);
      if (!link) {
        throw InvalidPathError("no active link between " + net.id(node) + " and " +
                               (path[i + 1] >= 0 && path[i + 1] < net.node_count() ? net.id(path[i + 1]) : "?"));
      }
      const double mbps = link_bandwidth_mbps(topology, topology.links()[*link], bandwidth);
      total += delay.packet_bits / (mbps * 1e6);
    }
  }
  return total;
}

PairEvaluation evaluate_pairs(const Topology& topology, const CommPairSet& pairs, const DelayParams& delay,
                              const BandwidthModel& bandwidth) {
  PairEvaluation out;
  out.pairs.resize(pairs.size());
  std::map<int, std::vector<int>> by_destination;
  for (std::size_t i = 0; i < pairs.size(); ++i) by_destination[pairs[i].destination_index].push_back(static_cast<int>(i));

  for (const auto& [dst, members] : by_destination) {
    const auto dist = hop_distances(topology, dst);
    for (int idx : members) {
      const int src = pairs[idx].source_index;
      auto path = shortest_hop_path(topology, src, dist);
      if (!path) continue;
      out.pairs[idx].hops = static_cast<int>(path->size()) - 1;
      out.pairs[idx].delay_s = path_delay(topology, *path, delay, bandwidth);
    }
  }
  double hop_sum = 0.0;
  double delay_sum = 0.0;
  for (const auto& m : out.pairs) {
    if (m.hops < 0) continue;
    ++out.connected;
    hop_sum += m.hops;
    delay_sum += m.delay_s;
    out.max_hops = std::max(out.max_hops, m.hops);
  }
  if (out.connected > 0) {
    out.l_avg = hop_sum / out.connected;
    out.mean_delay_s = delay_sum / out.connected;
  }
  return out;
}

double average_path_length(const Topology& topology, const CommPairSet& pairs) {
  return evaluate_pairs(topology, pairs, DelayParams{}, BandwidthModel{}).l_avg;
}

double mean_delay(const Topology& topology, const CommPairSet& pairs, const DelayParams& delay,
                  const BandwidthModel& bandwidth) {
  return evaluate_pairs(topology, pairs, delay, bandwidth).mean_delay_s;
}

double throughput(const Topology& topology, const ThroughputParams& params, const BandwidthModel& bandwidth,
                  double l_avg) {
  double w_v = 0.0;
  double w_i = 0.0;
  for (const auto& link : topology.links()) {
    const double mbps = link_bandwidth_mbps(topology, link, bandwidth);
    if (link.kind == LinkKind::v2v) {
      w_v += mbps * params.eta_v;
    } else {
      w_i += mbps * params.eta_i;
    }
  }
  const double loss = std::clamp(params.p_loss_per_hop * l_avg, 0.0, std::nextafter(1.0, 0.0));
  return (w_v + w_i) * (1.0 - loss);
}

StepMeasurement measure(const Topology& topology, const CommPairSet& pairs, const MetricParams& params) {
  StepMeasurement m;
  m.pairs = evaluate_pairs(topology, pairs, params.delay, params.bandwidth);
  m.stats = graph_stats(topology);
  m.record.step = topology.network().snapshot().step;
  m.record.l_avg = m.pairs.l_avg;
  m.record.mean_delay_s = m.pairs.mean_delay_s;
  m.record.throughput_mbps = throughput(topology, params.throughput, params.bandwidth, m.pairs.l_avg);
  m.record.connectivity_rate = m.stats.connectivity_rate;
  m.record.pair_count = pairs.size();
  return m;
}

}  // namespace vanet
