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

#ifndef TRACESIM_CONFIG_H
#define TRACESIM_CONFIG_H

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tracesim/types.h"

namespace tracesim
{
inline constexpr std::string_view sink_dram = "dram";
inline constexpr std::string_view sink_ptw = "ptw";

struct CoreConfig {
  uint64_t frequency = 4000; // MHz
  uint64_t rob_size = 256;
  uint64_t lq_size = 72;
  uint64_t sq_size = 56;
  uint64_t fetch_width = 4;
  uint64_t decode_width = 4;
  uint64_t execute_width = 4;
  uint64_t retire_width = 4;
  uint64_t fetch_buffer_size = 64;
  uint64_t mispredict_penalty = 20;
  uint64_t arithmetic_latency = 1;
  uint64_t ptw_mshr_size = 16;
  uint64_t ptw_queue_size = 16;

  std::string branch_predictor = "gshare";
  std::string btb = "basic_btb";
  // Empty means "whatever the L1I node names".
  std::string instruction_prefetcher;

  std::string itlb;
  std::string dtlb;
  std::string l1i;
  std::string l1d;

  bool operator==(const CoreConfig&) const = default;
};

enum class NodeKind { cache, tlb };

struct CacheNodeConfig {
  std::string name;
  NodeKind kind = NodeKind::cache;
  uint64_t sets = 64;
  uint64_t ways = 8;
  uint64_t block_size = 64;
  uint64_t hit_latency = 4;
  uint64_t fill_latency = 1;
  uint64_t rq_size = 32;
  uint64_t wq_size = 32;
  uint64_t pq_size = 32;
  uint64_t mshr_size = 16;
  uint64_t max_tag_lookups_per_cycle = 1;
  // MHz; 0 runs the node at the fastest core clock.
  uint64_t frequency = 0;
  bool prefetch_as_fill_here = true;
  std::vector<AccessType> prefetch_activate_on{AccessType::READ, AccessType::PREFETCH, AccessType::TRANSLATION};
  std::string lower_level = std::string{sink_dram};
  // Empty prefetcher name builds the node without any prefetcher.
  std::string prefetcher = "no";
  std::string replacement = "lru";

  bool operator==(const CacheNodeConfig&) const = default;
};

struct DramConfig {
  uint64_t channels = 1;
  uint64_t ranks_per_channel = 1;
  uint64_t banks_per_rank = 8;
  uint64_t rows_per_bank = 65536;
  uint64_t columns_per_row = 128;
  uint64_t frequency = 1600; // MHz
  uint64_t tRP = 24;
  uint64_t tRCD = 24;
  uint64_t tCAS = 24;
  uint64_t burst_cycles_per_block = 4;
  uint64_t rq_size = 64;
  uint64_t wq_size = 64;

  bool operator==(const DramConfig&) const = default;
};

struct SystemConfig {
  uint64_t num_cores = 1;
  std::vector<CoreConfig> cores;
  std::vector<CacheNodeConfig> cache_nodes;
  DramConfig dram;
  uint64_t block_size = 64;
  uint64_t page_size = 4096;
  uint64_t pt_levels = 4;
  uint64_t vm_seed = 0;

  const CacheNodeConfig* find_node(std::string_view name) const;
  CacheNodeConfig* find_node(std::string_view name);

  bool operator==(const SystemConfig&) const = default;
};

/// Warnings (unknown keys and the like) go to the given stream, if any.
SystemConfig parse_config(std::string_view text, std::ostream* warnings = nullptr);
SystemConfig load_config(const std::filesystem::path& path, std::ostream* warnings = nullptr);
std::string serialize_config(const SystemConfig& config);

SystemConfig default_config(uint64_t num_cores = 1);

/// The fully resolved memory graph for one validated configuration.
struct Topology {
  struct CoreChains {
    std::vector<std::string> instruction;
    std::vector<std::string> data;
    std::vector<std::string> itlb;
    std::vector<std::string> dtlb;
  };
  std::vector<CoreChains> chains;
  // Reachable nodes ordered so every node precedes its lower level.
  std::vector<std::string> node_order;
  std::map<std::string, std::vector<std::string>> upper_levels;
};

Topology validate_topology(const SystemConfig& config);
} // namespace tracesim

#endif
