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

#ifndef TRACESIM_SYSTEM_H
#define TRACESIM_SYSTEM_H

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tracesim/cache.h"
#include "tracesim/config.h"
#include "tracesim/core.h"
#include "tracesim/dram.h"
#include "tracesim/modules.h"
#include "tracesim/stats.h"
#include "tracesim/trace.h"
#include "tracesim/vmem.h"

namespace tracesim
{
/*
 * A fully assembled machine. Components are clocked on one global timeline in
 * picoseconds; at each instant the components whose clock edge falls there
 * operate in the order cores, page table walkers, cache nodes from the top of
 * the hierarchy down, and DRAM.
 */
class System
{
public:
  /// One trace per core, in core order. Throws ConfigError on any inconsistency.
  System(const SystemConfig& config, const ModuleRegistry& registry, std::vector<std::unique_ptr<InstructionSource>> traces);
  ~System();
  System(const System&) = delete;
  System& operator=(const System&) = delete;

  /// Warmup followed by measurement. Module final-stats output goes to `module_stats`, if given.
  SimReport run(uint64_t warmup, uint64_t simulate, std::ostream* module_stats = nullptr);

  /// Calls every initialize hook. run() does this itself when it has not happened yet.
  void initialize();
  /// Advances the global clock to the next edge and operates the components clocked there.
  void step();
  void reset_for_measurement();
  RawCounters collect() const;

  uint64_t now() const { return now_; }
  const SystemConfig& config() const { return config_; }
  const Topology& topology() const { return topology_; }
  std::size_t num_cores() const { return cores_.size(); }
  Core& core(std::size_t cpu) { return *cores_.at(cpu); }
  CacheNode& node(const std::string& name);
  bool has_node(const std::string& name) const { return nodes_by_name_.contains(name); }
  const std::vector<CacheNode*>& nodes() const { return node_order_; }
  Dram& dram() { return *dram_; }
  PageTableWalker& ptw(std::size_t cpu) { return *walkers_.at(cpu); }
  PageTable& page_table() { return *page_table_; }
  StatsGate& gate() { return gate_; }

  /// Core cycles without any retirement after which the run is declared deadlocked.
  void set_watchdog_cycles(uint64_t cycles) { watchdog_cycles_ = cycles; }

private:
  SystemConfig config_;
  Topology topology_;
  StatsGate gate_;
  std::vector<std::unique_ptr<InstructionSource>> traces_;
  std::unique_ptr<PageTable> page_table_;
  std::unique_ptr<Dram> dram_;
  std::vector<std::unique_ptr<PageTableWalker>> walkers_;
  std::unique_ptr<PtwRouter> ptw_router_;
  std::map<std::string, std::unique_ptr<CacheNode>, std::less<>> nodes_by_name_;
  std::vector<CacheNode*> node_order_;
  std::vector<std::unique_ptr<Core>> cores_;
  std::vector<Operable*> clocked_;
  uint64_t now_ = 0;
  bool initialized_ = false;
  bool ran_ = false;
  uint64_t watchdog_cycles_ = 5'000'000;
};
} // namespace tracesim

#endif
