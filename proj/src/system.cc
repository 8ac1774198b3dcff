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

#include "tracesim/system.h"

#include <algorithm>
#include <fmt/core.h>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace tracesim
{
System::System(const SystemConfig& config, const ModuleRegistry& registry, std::vector<std::unique_ptr<InstructionSource>> traces)
    : config_(config), topology_(validate_topology(config)), gate_(config.num_cores), traces_(std::move(traces))
{
  if (traces_.size() != config_.num_cores)
    throw ConfigError(fmt::format("{} cores are configured but {} traces were given", config_.num_cores, traces_.size()));

  uint64_t fastest = 0;
  for (const auto& core : config_.cores)
    fastest = std::max(fastest, core.frequency);

  const auto capacity = dram_capacity(config_.dram, config_.block_size);
  if (capacity < config_.page_size)
    throw ConfigError("DRAM capacity is smaller than one page");
  page_table_ = std::make_unique<PageTable>(capacity / config_.page_size, config_.page_size, static_cast<unsigned>(config_.pt_levels), config_.vm_seed);
  dram_ = std::make_unique<Dram>(config_.dram, config_.block_size, gate_);

  std::vector<PageTableWalker*> walker_ptrs;
  for (uint32_t cpu = 0; cpu < config_.num_cores; ++cpu) {
    const auto& core = config_.cores[cpu];
    walkers_.push_back(
        std::make_unique<PageTableWalker>(cpu, period_from_mhz(core.frequency), core.ptw_queue_size, core.ptw_mshr_size, *page_table_));
    walker_ptrs.push_back(walkers_.back().get());
  }
  ptw_router_ = std::make_unique<PtwRouter>(walker_ptrs);

  std::map<std::string, std::string> instruction_prefetchers;
  for (const auto& core : config_.cores) {
    if (core.instruction_prefetcher.empty())
      continue;
    auto [it, inserted] = instruction_prefetchers.try_emplace(core.l1i, core.instruction_prefetcher);
    if (!inserted && it->second != core.instruction_prefetcher)
      throw ConfigError(fmt::format("cores sharing '{}' name different instruction prefetchers", core.l1i));
  }

  for (const auto& name : topology_.node_order) {
    auto node_config = *config_.find_node(name);
    if (auto it = instruction_prefetchers.find(name); it != instruction_prefetchers.end())
      node_config.prefetcher = it->second;
    auto prefetcher = node_config.prefetcher.empty() ? nullptr : registry.make_prefetcher(node_config.prefetcher);
    auto replacement = registry.make_replacement(node_config.replacement);
    auto period = period_from_mhz(node_config.frequency != 0 ? node_config.frequency : fastest);
    auto node = std::make_unique<CacheNode>(node_config, period, gate_, std::move(replacement), std::move(prefetcher));
    node_order_.push_back(node.get());
    nodes_by_name_.emplace(name, std::move(node));
  }
  for (auto* node : node_order_) {
    const auto& lower = node->config().lower_level;
    if (lower == sink_dram)
      node->set_lower_level(dram_.get());
    else if (lower == sink_ptw)
      node->set_lower_level(ptw_router_.get());
    else
      node->set_lower_level(nodes_by_name_.at(lower).get());
  }

  for (uint32_t cpu = 0; cpu < config_.num_cores; ++cpu) {
    const auto& core = config_.cores[cpu];
    walkers_[cpu]->set_l1d(&node(core.l1d));
    CorePorts ports{&node(core.itlb), &node(core.dtlb), &node(core.l1i), &node(core.l1d), &node(core.l1i)};
    cores_.push_back(std::make_unique<Core>(cpu, core, config_.page_size, config_.block_size, *traces_[cpu], gate_,
                                            registry.make_branch_predictor(core.branch_predictor), registry.make_btb(core.btb), ports));
  }

  for (auto& core : cores_)
    clocked_.push_back(core.get());
  for (auto& walker : walkers_)
    clocked_.push_back(walker.get());
  for (auto* node : node_order_)
    clocked_.push_back(node);
  clocked_.push_back(dram_.get());
}

System::~System() = default;

CacheNode& System::node(const std::string& name)
{
  auto it = nodes_by_name_.find(name);
  if (it == nodes_by_name_.end())
    throw std::out_of_range(fmt::format("no cache node named '{}'", name));
  return *it->second;
}

void System::initialize()
{
  if (initialized_)
    throw std::logic_error("modules are already initialized");
  initialized_ = true;
  for (auto& core : cores_)
    core->initialize_modules();
  for (auto* node : node_order_)
    node->initialize_modules();
}

void System::step()
{
  uint64_t edge = clocked_.front()->next_edge();
  for (const auto* component : clocked_)
    edge = std::min(edge, component->next_edge());
  now_ = edge;
  for (auto* component : clocked_)
    if (component->next_edge() == edge)
      component->tick();
}

void System::reset_for_measurement()
{
  for (auto& core : cores_)
    core->reset_counters();
  for (auto* node : node_order_)
    node->reset_counters();
  dram_->reset_counters();
}

RawCounters System::collect() const
{
  RawCounters raw;
  for (const auto& core : cores_)
    raw.cores.push_back(core->counters());
  for (auto* node : node_order_) {
    RawCounters::Node entry{node->name(), node->counters(), 0};
    for (std::size_t cpu = 0; cpu < cores_.size(); ++cpu) {
      const auto& chains = topology_.chains[cpu];
      bool uses = false;
      for (const auto* chain : {&chains.instruction, &chains.data, &chains.itlb, &chains.dtlb})
        uses = uses || std::find(chain->begin(), chain->end(), node->name()) != chain->end();
      if (uses)
        entry.instructions += cores_[cpu]->counters().instructions;
    }
    raw.nodes.push_back(std::move(entry));
  }
  raw.dram = dram_->counters();
  return raw;
}

SimReport System::run(uint64_t warmup, uint64_t simulate, std::ostream* module_stats)
{
  if (ran_)
    throw std::logic_error("a System runs only once");
  ran_ = true;
  if (!initialized_)
    initialize();

  uint64_t slowest_period = 0;
  for (const auto& core : cores_)
    slowest_period = std::max(slowest_period, core->period());
  const uint64_t watchdog_ps = watchdog_cycles_ * slowest_period;

  auto retired = [this] {
    return std::accumulate(cores_.begin(), cores_.end(), uint64_t{0}, [](uint64_t sum, const auto& core) { return sum + core->retired_total(); });
  };
  auto warmed_up = [this, warmup] {
    return std::all_of(cores_.begin(), cores_.end(), [warmup](const auto& core) { return core->retired_total() >= warmup; });
  };

  bool measuring = false;
  uint64_t last_retired = retired();
  uint64_t last_progress = now_;
  while (true) {
    if (!measuring && warmed_up()) {
      reset_for_measurement();
      for (auto& core : cores_)
        core->begin_measurement(simulate);
      measuring = true;
    }
    if (measuring && !gate_.any_counting())
      break;

    step();

    if (auto total = retired(); total != last_retired) {
      last_retired = total;
      last_progress = now_;
    } else if (now_ - last_progress > watchdog_ps) {
      throw SimulationError(fmt::format("no instruction retired for {} cycles; the machine is deadlocked", watchdog_cycles_));
    }
  }

  std::ostream discard{nullptr};
  auto& out = module_stats != nullptr ? *module_stats : discard;
  for (auto& core : cores_)
    core->final_stats(out);
  for (auto* node : node_order_)
    node->final_stats(out);

  return compute_final_metrics(collect());
}
} // namespace tracesim
