/*
 *    Copyright 2026 The tracesim Contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TRACESIM_STATS_H
#define TRACESIM_STATS_H

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "tracesim/types.h"

namespace tracesim
{
struct CoreCounters {
  uint64_t instructions = 0;
  uint64_t cycles = 0;
  std::array<uint64_t, num_branch_classes> branches{};
  std::array<uint64_t, num_branch_classes> mispredictions{};
};

struct NodeCounters {
  std::array<uint64_t, num_access_types> hits{};
  std::array<uint64_t, num_access_types> misses{};
  uint64_t mshr_merges = 0;
  uint64_t pf_requested = 0;
  uint64_t pf_issued = 0;
  uint64_t pf_filled = 0;
  uint64_t pf_useful = 0;
  uint64_t pf_useless = 0;
  uint64_t fills = 0;
  uint64_t bypasses = 0;
  uint64_t miss_completions = 0;
  uint64_t writebacks = 0;
  uint64_t demand_miss_latency = 0; // node cycles, summed
  uint64_t demand_miss_count = 0;
  uint64_t walk_accesses = 0;
  uint64_t serviced_rq = 0;
  uint64_t serviced_wq = 0;
  uint64_t serviced_pq = 0;

  NodeCounters& operator+=(const NodeCounters& other);
  uint64_t total_hits() const;
  uint64_t total_misses() const;
  uint64_t demand_misses() const;
};

struct DramCounters {
  uint64_t reads = 0;
  uint64_t writes = 0;
  uint64_t row_hits = 0;
  uint64_t row_misses = 0;
  uint64_t cycles = 0;
  std::vector<uint64_t> bus_busy_cycles; // per channel
};

/// Tracks which cores still contribute to counters. A core freezes once it reaches its instruction target.
class StatsGate
{
  std::vector<uint8_t> frozen_;

public:
  explicit StatsGate(std::size_t num_cores) : frozen_(num_cores, 0) {}
  bool counting(uint32_t cpu) const { return cpu < frozen_.size() && frozen_[cpu] == 0; }
  bool any_counting() const;
  void freeze(uint32_t cpu) { frozen_.at(cpu) = 1; }
  std::size_t size() const { return frozen_.size(); }
};

/// A ratio whose denominator may be zero; undefined ratios report 0.
struct Ratio {
  double value = 0.0;
  bool defined = false;
};

Ratio safe_ratio(double numerator, double denominator);

struct CoreReport {
  uint32_t cpu = 0;
  uint64_t instructions = 0;
  uint64_t cycles = 0;
  Ratio ipc;
  uint64_t branch_predictions = 0;
  uint64_t branch_mispredictions = 0;
  Ratio branch_accuracy;
  Ratio branch_mpki;
  std::array<uint64_t, num_branch_classes> predictions_by_class{};
  std::array<uint64_t, num_branch_classes> mispredictions_by_class{};
  std::array<Ratio, num_branch_classes> mpki_by_class{};
};

struct NodeReport {
  std::string name;
  NodeCounters counters;
  uint64_t instructions = 0; // of the cores whose chains include the node
  Ratio mpki;
  Ratio prefetch_accuracy;
  Ratio average_miss_latency;
};

struct DramReport {
  DramCounters counters;
  Ratio row_hit_rate;
  std::vector<Ratio> bus_busy_fraction;
};

struct SimReport {
  std::vector<CoreReport> cores;
  std::vector<NodeReport> nodes;
  DramReport dram;

  /// Flat keys such as "cpu0.ipc" or "cpu0_L1D.READ.misses"; ratios carry a "<key>_defined" flag.
  nlohmann::json to_json() const;
  void print_text(std::ostream& out) const;
};

struct RawCounters {
  std::vector<CoreCounters> cores;
  struct Node {
    std::string name;
    NodeCounters counters;
    uint64_t instructions = 0;
  };
  std::vector<Node> nodes;
  DramCounters dram;
};

SimReport compute_final_metrics(const RawCounters& counters);
} // namespace tracesim

#endif
