#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>

#include "vanet/netgraph.hpp"

namespace vanet {

enum class BaselineKind { greedy, shortest_path, motif };

const char* to_string(BaselineKind kind);

/// Distance-first greedy: candidates sorted by ascending distance, then
/// adaptability descending (V2I counts as 1), then V2V before V2I and
/// candidate order; each is kept while the caps hold. RSU bandwidth is
/// split equally among attached vehicles.
LinkStrategy greedy_build(const Network& network, const CandidateLinks& candidates, const LinkLimits& limits);

/// Union of hop-shortest routes (distance tie-break) over the candidate
/// graph, one key pair at a time in pair order. Links already active cost
/// no distance; links that would break a cap are skipped.
LinkStrategy shortest_path_build(const Network& network, const CandidateLinks& candidates, const CommPairSet& pairs,
                                 const LinkLimits& limits);

struct MotifParams {
  std::size_t window = 50;
  double heading_tolerance_rad = 0.5235987755982988;  // pi / 6
  double v2v_range_m = 300.0;
};

/// Rolling co-travel counts: consecutive steps a vehicle pair spent within
/// V2V range with headings closer than the tolerance, capped at the window.
class MotifTracker {
 public:
  explicit MotifTracker(MotifParams params = {}) : params_(params) {}

  void observe(const NetworkSnapshot& snapshot);
  /// Count for an unordered vehicle pair; 0 when never co-travelling.
  std::size_t count(const std::string& a, const std::string& b) const;
  std::size_t observed_steps() const { return steps_; }
  const MotifParams& params() const { return params_; }

 private:
  MotifParams params_;
  std::map<std::pair<std::string, std::string>, std::size_t> counts_;
  std::size_t steps_ = 0;
};

/// Co-travelling V2V pairs first by descending count, then every remaining
/// candidate in greedy order, subject to the caps.
LinkStrategy motif_build(const MotifTracker& tracker, const Network& network, const CandidateLinks& candidates,
                         const LinkLimits& limits);

}  // namespace vanet
