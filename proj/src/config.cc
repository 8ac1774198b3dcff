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

#include "tracesim/config.h"

#include <algorithm>
#include <fmt/core.h>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <ostream>
#include <set>
#include <sstream>

namespace tracesim
{
using json = nlohmann::json;

namespace
{
class ObjectReader
{
  const json& obj_;
  std::string ctx_;
  std::set<std::string, std::less<>> seen_;

  std::string key_name(std::string_view key) const { return ctx_.empty() ? std::string{key} : fmt::format("{}.{}", ctx_, key); }

  const json* lookup(std::string_view key)
  {
    seen_.emplace(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

public:
  ObjectReader(const json& obj, std::string ctx) : obj_(obj), ctx_(std::move(ctx))
  {
    if (!obj_.is_object())
      throw ConfigError(fmt::format("{}: expected a JSON object", ctx_.empty() ? "<root>" : ctx_));
  }

  bool has(std::string_view key) const { return obj_.contains(key); }

  void get(std::string_view key, uint64_t& out)
  {
    if (auto* v = lookup(key)) {
      if (!v->is_number_unsigned())
        throw ConfigError(fmt::format("{}: expected a non-negative integer", key_name(key)));
      out = v->get<uint64_t>();
    }
  }

  void get(std::string_view key, bool& out)
  {
    if (auto* v = lookup(key)) {
      if (!v->is_boolean())
        throw ConfigError(fmt::format("{}: expected a boolean", key_name(key)));
      out = v->get<bool>();
    }
  }

  void get(std::string_view key, std::string& out)
  {
    if (auto* v = lookup(key)) {
      if (!v->is_string())
        throw ConfigError(fmt::format("{}: expected a string", key_name(key)));
      out = v->get<std::string>();
    }
  }

  void get(std::string_view key, NodeKind& out)
  {
    if (auto* v = lookup(key)) {
      if (v->is_string() && *v == "cache")
        out = NodeKind::cache;
      else if (v->is_string() && *v == "tlb")
        out = NodeKind::tlb;
      else
        throw ConfigError(fmt::format("{}: expected \"cache\" or \"tlb\"", key_name(key)));
    }
  }

  void get(std::string_view key, std::vector<AccessType>& out)
  {
    if (auto* v = lookup(key)) {
      if (!v->is_array())
        throw ConfigError(fmt::format("{}: expected an array of access types", key_name(key)));
      std::vector<AccessType> types;
      for (const auto& item : *v) {
        auto type = item.is_string() ? access_type_from_string(item.get<std::string>()) : std::nullopt;
        if (!type)
          throw ConfigError(fmt::format("{}: unknown access type {}", key_name(key), item.dump()));
        if (std::find(types.begin(), types.end(), *type) == types.end())
          types.push_back(*type);
      }
      out = std::move(types);
    }
  }

  const json* child(std::string_view key) { return lookup(key); }

  void finish(std::ostream* warnings) const
  {
    if (warnings == nullptr)
      return;
    for (const auto& [key, value] : obj_.items())
      if (!seen_.contains(key))
        *warnings << fmt::format("warning: ignoring unknown configuration key '{}'\n", key_name(key));
  }

  void require_at_least(std::string_view key, uint64_t value, uint64_t minimum) const
  {
    if (value < minimum)
      throw ConfigError(fmt::format("{} must be at least {} (got {})", key_name(key), minimum, value));
  }

  void require_power_of_two(std::string_view key, uint64_t value) const
  {
    if (!is_power_of_two(value))
      throw ConfigError(fmt::format("{} must be a power of two (got {})", key_name(key), value));
  }
};

std::string core_node_name(uint64_t cpu, std::string_view suffix) { return fmt::format("cpu{}_{}", cpu, suffix); }

CoreConfig default_core(uint64_t cpu)
{
  CoreConfig core;
  core.itlb = core_node_name(cpu, "ITLB");
  core.dtlb = core_node_name(cpu, "DTLB");
  core.l1i = core_node_name(cpu, "L1I");
  core.l1d = core_node_name(cpu, "L1D");
  return core;
}

CacheNodeConfig make_node(std::string name, NodeKind kind, uint64_t sets, uint64_t ways, uint64_t block_size, uint64_t hit, uint64_t fill,
                          std::string lower)
{
  CacheNodeConfig node;
  node.name = std::move(name);
  node.kind = kind;
  node.sets = sets;
  node.ways = ways;
  node.block_size = block_size;
  node.hit_latency = hit;
  node.fill_latency = fill;
  node.lower_level = std::move(lower);
  return node;
}

std::vector<CacheNodeConfig> default_nodes(uint64_t num_cores, uint64_t block_size, uint64_t page_size)
{
  std::vector<CacheNodeConfig> nodes;
  for (uint64_t cpu = 0; cpu < num_cores; ++cpu) {
    // 32 KiB, 8-way
    auto l1_sets = (32 * 1024) / (8 * block_size);
    nodes.push_back(make_node(core_node_name(cpu, "L1I"), NodeKind::cache, l1_sets, 8, block_size, 4, 4, core_node_name(cpu, "L2C")));
    nodes.push_back(make_node(core_node_name(cpu, "L1D"), NodeKind::cache, l1_sets, 8, block_size, 4, 4, core_node_name(cpu, "L2C")));
    nodes.back().max_tag_lookups_per_cycle = 2;
    // 512 KiB, 8-way
    nodes.push_back(make_node(core_node_name(cpu, "L2C"), NodeKind::cache, (512 * 1024) / (8 * block_size), 8, block_size, 10, 1, "LLC"));
    nodes.push_back(make_node(core_node_name(cpu, "ITLB"), NodeKind::tlb, 16, 4, page_size, 1, 1, core_node_name(cpu, "STLB")));
    nodes.push_back(make_node(core_node_name(cpu, "DTLB"), NodeKind::tlb, 16, 4, page_size, 1, 1, core_node_name(cpu, "STLB")));
    nodes.push_back(make_node(core_node_name(cpu, "STLB"), NodeKind::tlb, 128, 12, page_size, 8, 1, std::string{sink_ptw}));
  }
  // 2 MiB per core, 16-way
  nodes.push_back(make_node("LLC", NodeKind::cache, num_cores * (2 * 1024 * 1024) / (16 * block_size), 16, block_size, 20, 1, std::string{sink_dram}));
  return nodes;
}

void read_core(const json& j, CoreConfig& core, const std::string& ctx, std::ostream* warnings)
{
  ObjectReader r{j, ctx};
  r.get("frequency", core.frequency);
  r.get("rob_size", core.rob_size);
  r.get("lq_size", core.lq_size);
  r.get("sq_size", core.sq_size);
  r.get("fetch_width", core.fetch_width);
  r.get("decode_width", core.decode_width);
  r.get("execute_width", core.execute_width);
  r.get("retire_width", core.retire_width);
  r.get("fetch_buffer_size", core.fetch_buffer_size);
  r.get("mispredict_penalty", core.mispredict_penalty);
  r.get("arithmetic_latency", core.arithmetic_latency);
  r.get("ptw_mshr_size", core.ptw_mshr_size);
  r.get("ptw_queue_size", core.ptw_queue_size);
  r.get("branch_predictor", core.branch_predictor);
  r.get("btb", core.btb);
  r.get("instruction_prefetcher", core.instruction_prefetcher);
  r.get("itlb", core.itlb);
  r.get("dtlb", core.dtlb);
  r.get("l1i", core.l1i);
  r.get("l1d", core.l1d);
  r.finish(warnings);

  r.require_at_least("frequency", core.frequency, 1);
  r.require_at_least("rob_size", core.rob_size, 1);
  r.require_at_least("lq_size", core.lq_size, 1);
  r.require_at_least("sq_size", core.sq_size, 1);
  r.require_at_least("fetch_width", core.fetch_width, 1);
  r.require_at_least("decode_width", core.decode_width, 1);
  r.require_at_least("execute_width", core.execute_width, 1);
  r.require_at_least("retire_width", core.retire_width, 1);
  r.require_at_least("fetch_buffer_size", core.fetch_buffer_size, 1);
  r.require_at_least("arithmetic_latency", core.arithmetic_latency, 1);
  r.require_at_least("ptw_mshr_size", core.ptw_mshr_size, 1);
  r.require_at_least("ptw_queue_size", core.ptw_queue_size, 1);
}

void read_node(const json& j, CacheNodeConfig& node, const std::string& ctx, std::ostream* warnings)
{
  ObjectReader r{j, ctx};
  r.get("name", node.name);
  r.get("kind", node.kind);
  r.get("sets", node.sets);
  r.get("ways", node.ways);
  r.get("block_size", node.block_size);
  r.get("hit_latency", node.hit_latency);
  r.get("fill_latency", node.fill_latency);
  r.get("rq_size", node.rq_size);
  r.get("wq_size", node.wq_size);
  r.get("pq_size", node.pq_size);
  r.get("mshr_size", node.mshr_size);
  r.get("max_tag_lookups_per_cycle", node.max_tag_lookups_per_cycle);
  r.get("frequency", node.frequency);
  r.get("prefetch_as_fill_here", node.prefetch_as_fill_here);
  r.get("prefetch_activate_on", node.prefetch_activate_on);
  r.get("lower_level", node.lower_level);
  r.get("prefetcher", node.prefetcher);
  r.get("replacement", node.replacement);
  r.finish(warnings);

  r.require_at_least("sets", node.sets, 1);
  r.require_at_least("ways", node.ways, 1);
  r.require_power_of_two("block_size", node.block_size);
  r.require_at_least("hit_latency", node.hit_latency, 1);
  r.require_at_least("rq_size", node.rq_size, 1);
  r.require_at_least("wq_size", node.wq_size, 1);
  r.require_at_least("pq_size", node.pq_size, 1);
  r.require_at_least("mshr_size", node.mshr_size, 1);
  r.require_at_least("max_tag_lookups_per_cycle", node.max_tag_lookups_per_cycle, 1);
  if (node.lower_level.empty())
    throw ConfigError(fmt::format("{}.lower_level must name a node, \"dram\" or \"ptw\"", ctx));
}

void read_dram(const json& j, DramConfig& dram, std::ostream* warnings)
{
  ObjectReader r{j, "dram"};
  r.get("channels", dram.channels);
  r.get("ranks_per_channel", dram.ranks_per_channel);
  r.get("banks_per_rank", dram.banks_per_rank);
  r.get("rows_per_bank", dram.rows_per_bank);
  r.get("columns_per_row", dram.columns_per_row);
  r.get("frequency", dram.frequency);
  r.get("tRP", dram.tRP);
  r.get("tRCD", dram.tRCD);
  r.get("tCAS", dram.tCAS);
  r.get("burst_cycles_per_block", dram.burst_cycles_per_block);
  r.get("rq_size", dram.rq_size);
  r.get("wq_size", dram.wq_size);
  r.finish(warnings);

  r.require_power_of_two("channels", dram.channels);
  r.require_power_of_two("ranks_per_channel", dram.ranks_per_channel);
  r.require_power_of_two("banks_per_rank", dram.banks_per_rank);
  r.require_power_of_two("rows_per_bank", dram.rows_per_bank);
  r.require_power_of_two("columns_per_row", dram.columns_per_row);
  r.require_at_least("frequency", dram.frequency, 1);
  r.require_at_least("tRP", dram.tRP, 1);
  r.require_at_least("tRCD", dram.tRCD, 1);
  r.require_at_least("tCAS", dram.tCAS, 1);
  r.require_at_least("burst_cycles_per_block", dram.burst_cycles_per_block, 1);
  r.require_at_least("rq_size", dram.rq_size, 1);
  r.require_at_least("wq_size", dram.wq_size, 1);
}

json to_json(const CoreConfig& core)
{
  return json{{"frequency", core.frequency},
              {"rob_size", core.rob_size},
              {"lq_size", core.lq_size},
              {"sq_size", core.sq_size},
              {"fetch_width", core.fetch_width},
              {"decode_width", core.decode_width},
              {"execute_width", core.execute_width},
              {"retire_width", core.retire_width},
              {"fetch_buffer_size", core.fetch_buffer_size},
              {"mispredict_penalty", core.mispredict_penalty},
              {"arithmetic_latency", core.arithmetic_latency},
              {"ptw_mshr_size", core.ptw_mshr_size},
              {"ptw_queue_size", core.ptw_queue_size},
              {"branch_predictor", core.branch_predictor},
              {"btb", core.btb},
              {"instruction_prefetcher", core.instruction_prefetcher},
              {"itlb", core.itlb},
              {"dtlb", core.dtlb},
              {"l1i", core.l1i},
              {"l1d", core.l1d}};
}

json to_json(const CacheNodeConfig& node)
{
  json activate = json::array();
  for (auto type : node.prefetch_activate_on)
    activate.push_back(std::string{to_string(type)});
  return json{{"name", node.name},
              {"kind", node.kind == NodeKind::tlb ? "tlb" : "cache"},
              {"sets", node.sets},
              {"ways", node.ways},
              {"block_size", node.block_size},
              {"hit_latency", node.hit_latency},
              {"fill_latency", node.fill_latency},
              {"rq_size", node.rq_size},
              {"wq_size", node.wq_size},
              {"pq_size", node.pq_size},
              {"mshr_size", node.mshr_size},
              {"max_tag_lookups_per_cycle", node.max_tag_lookups_per_cycle},
              {"frequency", node.frequency},
              {"prefetch_as_fill_here", node.prefetch_as_fill_here},
              {"prefetch_activate_on", activate},
              {"lower_level", node.lower_level},
              {"prefetcher", node.prefetcher},
              {"replacement", node.replacement}};
}

json to_json(const DramConfig& dram)
{
  return json{{"channels", dram.channels},
              {"ranks_per_channel", dram.ranks_per_channel},
              {"banks_per_rank", dram.banks_per_rank},
              {"rows_per_bank", dram.rows_per_bank},
              {"columns_per_row", dram.columns_per_row},
              {"frequency", dram.frequency},
              {"tRP", dram.tRP},
              {"tRCD", dram.tRCD},
              {"tCAS", dram.tCAS},
              {"burst_cycles_per_block", dram.burst_cycles_per_block},
              {"rq_size", dram.rq_size},
              {"wq_size", dram.wq_size}};
}
} // namespace

const CacheNodeConfig* SystemConfig::find_node(std::string_view name) const
{
  auto it = std::find_if(cache_nodes.begin(), cache_nodes.end(), [name](const auto& n) { return n.name == name; });
  return it == cache_nodes.end() ? nullptr : &*it;
}

CacheNodeConfig* SystemConfig::find_node(std::string_view name)
{
  return const_cast<CacheNodeConfig*>(std::as_const(*this).find_node(name));
}

SystemConfig default_config(uint64_t num_cores)
{
  SystemConfig config;
  config.num_cores = num_cores;
  for (uint64_t cpu = 0; cpu < num_cores; ++cpu)
    config.cores.push_back(default_core(cpu));
  config.cache_nodes = default_nodes(num_cores, config.block_size, config.page_size);
  return config;
}

SystemConfig parse_config(std::string_view text, std::ostream* warnings)
{
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("malformed JSON at byte {}: {}", e.byte, e.what()));
  }

  SystemConfig config;
  ObjectReader r{root, ""};
  r.get("block_size", config.block_size);
  r.get("page_size", config.page_size);
  r.get("pt_levels", config.pt_levels);
  r.get("vm_seed", config.vm_seed);
  r.require_power_of_two("block_size", config.block_size);
  r.require_power_of_two("page_size", config.page_size);
  if (config.page_size < config.block_size)
    throw ConfigError("page_size must be at least block_size");
  r.require_at_least("pt_levels", config.pt_levels, 1);
  if (config.pt_levels > 8)
    throw ConfigError(fmt::format("pt_levels must be at most 8 (got {})", config.pt_levels));

  const json* cores = r.child("cores");
  if (cores != nullptr && !cores->is_array())
    throw ConfigError("cores: expected an array");

  bool has_num_cores = r.has("num_cores");
  r.get("num_cores", config.num_cores);
  if (!has_num_cores && cores != nullptr)
    config.num_cores = cores->size();
  r.require_at_least("num_cores", config.num_cores, 1);
  if (cores != nullptr && cores->size() != config.num_cores)
    throw ConfigError(fmt::format("num_cores is {} but cores lists {} entries", config.num_cores, cores->size()));

  for (uint64_t cpu = 0; cpu < config.num_cores; ++cpu) {
    config.cores.push_back(default_core(cpu));
    if (cores != nullptr)
      read_core((*cores)[cpu], config.cores.back(), fmt::format("cores[{}]", cpu), warnings);
  }

  config.cache_nodes = default_nodes(config.num_cores, config.block_size, config.page_size);
  if (const json* caches = r.child("caches"); caches != nullptr) {
    if (!caches->is_array())
      throw ConfigError("caches: expected an array");
    for (std::size_t i = 0; i < caches->size(); ++i) {
      const auto& entry = (*caches)[i];
      auto ctx = fmt::format("caches[{}]", i);
      if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string())
        throw ConfigError(fmt::format("{}.name: every cache entry needs a string name", ctx));
      auto name = entry["name"].get<std::string>();
      if (auto* existing = config.find_node(name); existing != nullptr) {
        read_node(entry, *existing, ctx, warnings);
      } else {
        CacheNodeConfig node;
        node.block_size = config.block_size;
        if (entry.contains("kind") && entry["kind"] == "tlb") {
          node.block_size = config.page_size;
          node.hit_latency = 1;
        }
        read_node(entry, node, ctx, warnings);
        config.cache_nodes.push_back(std::move(node));
      }
    }
  }

  if (const json* dram = r.child("dram"); dram != nullptr)
    read_dram(*dram, config.dram, warnings);
  r.finish(warnings);
  return config;
}

SystemConfig load_config(const std::filesystem::path& path, std::ostream* warnings)
{
  std::ifstream in{path};
  if (!in)
    throw ConfigError(fmt::format("cannot read configuration file {}", path.string()));
  std::string text{std::istreambuf_iterator<char>{in}, std::istreambuf_iterator<char>{}};
  return parse_config(text, warnings);
}

std::string serialize_config(const SystemConfig& config)
{
  json root{{"num_cores", config.num_cores},   {"block_size", config.block_size}, {"page_size", config.page_size},
            {"pt_levels", config.pt_levels},   {"vm_seed", config.vm_seed},       {"dram", to_json(config.dram)},
            {"cores", json::array()},          {"caches", json::array()}};
  for (const auto& core : config.cores)
    root["cores"].push_back(to_json(core));
  for (const auto& node : config.cache_nodes)
    root["caches"].push_back(to_json(node));
  return root.dump(2);
}

Topology validate_topology(const SystemConfig& config)
{
  if (config.cores.size() != config.num_cores)
    throw ConfigError(fmt::format("num_cores is {} but {} cores are configured", config.num_cores, config.cores.size()));

  std::set<std::string, std::less<>> seen_names;
  for (const auto& node : config.cache_nodes) {
    if (node.name == sink_dram || node.name == sink_ptw)
      throw ConfigError(fmt::format("node name '{}' is reserved", node.name));
    if (!seen_names.insert(node.name).second)
      throw ConfigError(fmt::format("duplicate node name '{}'", node.name));
  }
  for (const auto& node : config.cache_nodes) {
    if (node.lower_level != sink_dram && node.lower_level != sink_ptw && config.find_node(node.lower_level) == nullptr)
      throw ConfigError(fmt::format("dangling node reference: {}.lower_level = '{}'", node.name, node.lower_level));
  }

  // Follows lower_level links to a sink, rejecting cycles.
  auto chain_from = [&](const std::string& start) {
    std::vector<std::string> chain;
    std::string current = start;
    while (current != sink_dram && current != sink_ptw) {
      if (std::find(chain.begin(), chain.end(), current) != chain.end())
        throw ConfigError(fmt::format("cycle in cache hierarchy through '{}'", current));
      chain.push_back(current);
      current = config.find_node(current)->lower_level;
    }
    chain.push_back(current);
    return chain;
  };

  // Every node is checked, including ones no core reaches.
  for (const auto& node : config.cache_nodes)
    chain_from(node.name);

  Topology topo;
  std::set<std::string> reachable;
  for (std::size_t cpu = 0; cpu < config.cores.size(); ++cpu) {
    const auto& core = config.cores[cpu];
    auto check_entry = [&](std::string_view role, const std::string& name, NodeKind expected) {
      const auto* node = config.find_node(name);
      if (node == nullptr)
        throw ConfigError(fmt::format("dangling node reference: cores[{}].{} = '{}'", cpu, role, name));
      if (node->kind != expected)
        throw ConfigError(fmt::format("cores[{}].{} = '{}' must be a {}", cpu, role, name, expected == NodeKind::tlb ? "tlb" : "cache"));
    };
    check_entry("itlb", core.itlb, NodeKind::tlb);
    check_entry("dtlb", core.dtlb, NodeKind::tlb);
    check_entry("l1i", core.l1i, NodeKind::cache);
    check_entry("l1d", core.l1d, NodeKind::cache);

    Topology::CoreChains chains{chain_from(core.l1i), chain_from(core.l1d), chain_from(core.itlb), chain_from(core.dtlb)};
    for (const auto* tlb_chain : {&chains.itlb, &chains.dtlb}) {
      if (tlb_chain->back() != sink_ptw)
        throw ConfigError(fmt::format("TLB chain must sink at PTW: '{}' reaches {}", tlb_chain->front(), tlb_chain->back()));
    }
    for (const auto* data_chain : {&chains.instruction, &chains.data}) {
      if (data_chain->back() != sink_dram)
        throw ConfigError(fmt::format("data chain must sink at dram: '{}' reaches {}", data_chain->front(), data_chain->back()));
    }
    for (const auto* chain : {&chains.itlb, &chains.dtlb, &chains.instruction, &chains.data}) {
      bool tlb = chain == &chains.itlb || chain == &chains.dtlb;
      for (std::size_t i = 0; i + 1 < chain->size(); ++i) {
        const auto* node = config.find_node((*chain)[i]);
        if ((node->kind == NodeKind::tlb) != tlb)
          throw ConfigError(fmt::format("node '{}' is a {} but sits in a {} chain", node->name, node->kind == NodeKind::tlb ? "tlb" : "cache",
                                        tlb ? "TLB" : "data"));
        if (tlb && node->block_size != config.page_size)
          throw ConfigError(fmt::format("{}.block_size must equal page_size for TLB nodes", node->name));
        if (!tlb && node->block_size != config.block_size)
          throw ConfigError(fmt::format("{}.block_size must equal the system block_size", node->name));
        reachable.insert(node->name);
      }
    }
    topo.chains.push_back(std::move(chains));
  }

  // Height above the sink orders every node before its lower level.
  auto height = [&](const std::string& name) { return chain_from(name).size(); };
  std::vector<std::pair<std::size_t, std::size_t>> order;
  for (std::size_t i = 0; i < config.cache_nodes.size(); ++i)
    if (reachable.contains(config.cache_nodes[i].name))
      order.emplace_back(height(config.cache_nodes[i].name), i);
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (auto [h, i] : order) {
    const auto& node = config.cache_nodes[i];
    topo.node_order.push_back(node.name);
    topo.upper_levels.try_emplace(node.name);
    if (node.lower_level != sink_dram && node.lower_level != sink_ptw)
      topo.upper_levels[node.lower_level].push_back(node.name);
  }
  return topo;
}
} // namespace tracesim
