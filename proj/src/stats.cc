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

#include "tracesim/stats.h"

#include <algorithm>
#include <fmt/core.h>
#include <numeric>
#include <ostream>

namespace tracesim
{
NodeCounters& NodeCounters::operator+=(const NodeCounters& other)
{
  for (std::size_t i = 0; i < num_access_types; ++i) {
    hits[i] += other.hits[i];
    misses[i] += other.misses[i];
  }
  mshr_merges += other.mshr_merges;
  pf_requested += other.pf_requested;
  pf_issued += other.pf_issued;
  pf_filled += other.pf_filled;
  pf_useful += other.pf_useful;
  pf_useless += other.pf_useless;
  fills += other.fills;
  bypasses += other.bypasses;
  miss_completions += other.miss_completions;
  writebacks += other.writebacks;
  demand_miss_latency += other.demand_miss_latency;
  demand_miss_count += other.demand_miss_count;
  walk_accesses += other.walk_accesses;
  serviced_rq += other.serviced_rq;
  serviced_wq += other.serviced_wq;
  serviced_pq += other.serviced_pq;
  return *this;
}

uint64_t NodeCounters::total_hits() const { return std::accumulate(hits.begin(), hits.end(), uint64_t{0}); }
uint64_t NodeCounters::total_misses() const { return std::accumulate(misses.begin(), misses.end(), uint64_t{0}); }

uint64_t NodeCounters::demand_misses() const
{
  return misses[index_of(AccessType::READ)] + misses[index_of(AccessType::WRITE)] + misses[index_of(AccessType::TRANSLATION)];
}

bool StatsGate::any_counting() const
{
  return std::any_of(frozen_.begin(), frozen_.end(), [](uint8_t f) { return f == 0; });
}

Ratio safe_ratio(double numerator, double denominator)
{
  if (denominator == 0.0)
    return {};
  return {numerator / denominator, true};
}

SimReport compute_final_metrics(const RawCounters& counters)
{
  SimReport report;
  for (std::size_t cpu = 0; cpu < counters.cores.size(); ++cpu) {
    const auto& c = counters.cores[cpu];
    CoreReport r;
    r.cpu = static_cast<uint32_t>(cpu);
    r.instructions = c.instructions;
    r.cycles = c.cycles;
    r.ipc = safe_ratio(static_cast<double>(c.instructions), static_cast<double>(c.cycles));
    for (auto cls : all_branch_classes) {
      if (cls == BranchClass::NOT_BRANCH)
        continue;
      auto i = index_of(cls);
      r.predictions_by_class[i] = c.branches[i];
      r.mispredictions_by_class[i] = c.mispredictions[i];
      r.mpki_by_class[i] = safe_ratio(1000.0 * static_cast<double>(c.mispredictions[i]), static_cast<double>(c.instructions));
      r.branch_predictions += c.branches[i];
      r.branch_mispredictions += c.mispredictions[i];
    }
    r.branch_accuracy = safe_ratio(static_cast<double>(r.branch_predictions - r.branch_mispredictions), static_cast<double>(r.branch_predictions));
    r.branch_mpki = safe_ratio(1000.0 * static_cast<double>(r.branch_mispredictions), static_cast<double>(c.instructions));
    report.cores.push_back(r);
  }

  for (const auto& node : counters.nodes) {
    NodeReport r;
    r.name = node.name;
    r.counters = node.counters;
    r.instructions = node.instructions;
    r.mpki = safe_ratio(1000.0 * static_cast<double>(node.counters.demand_misses()), static_cast<double>(node.instructions));
    r.prefetch_accuracy =
        safe_ratio(static_cast<double>(node.counters.pf_useful), static_cast<double>(node.counters.pf_useful + node.counters.pf_useless));
    r.average_miss_latency = safe_ratio(static_cast<double>(node.counters.demand_miss_latency), static_cast<double>(node.counters.demand_miss_count));
    report.nodes.push_back(std::move(r));
  }

  report.dram.counters = counters.dram;
  report.dram.row_hit_rate =
      safe_ratio(static_cast<double>(counters.dram.row_hits), static_cast<double>(counters.dram.row_hits + counters.dram.row_misses));
  for (auto busy : counters.dram.bus_busy_cycles)
    report.dram.bus_busy_fraction.push_back(safe_ratio(static_cast<double>(busy), static_cast<double>(counters.dram.cycles)));
  return report;
}

namespace
{
void put_ratio(nlohmann::json& j, const std::string& key, const Ratio& r)
{
  j[key] = r.value;
  j[key + "_defined"] = r.defined;
}
} // namespace

nlohmann::json SimReport::to_json() const
{
  nlohmann::json j = nlohmann::json::object();
  for (const auto& core : cores) {
    auto prefix = fmt::format("cpu{}.", core.cpu);
    j[prefix + "instructions"] = core.instructions;
    j[prefix + "cycles"] = core.cycles;
    put_ratio(j, prefix + "ipc", core.ipc);
    j[prefix + "branch.predictions"] = core.branch_predictions;
    j[prefix + "branch.mispredictions"] = core.branch_mispredictions;
    put_ratio(j, prefix + "branch.accuracy", core.branch_accuracy);
    put_ratio(j, prefix + "branch.mpki", core.branch_mpki);
    for (auto cls : all_branch_classes) {
      if (cls == BranchClass::NOT_BRANCH)
        continue;
      auto i = index_of(cls);
      auto cls_prefix = fmt::format("{}branch.{}.", prefix, to_string(cls));
      j[cls_prefix + "predictions"] = core.predictions_by_class[i];
      j[cls_prefix + "mispredictions"] = core.mispredictions_by_class[i];
      put_ratio(j, cls_prefix + "mpki", core.mpki_by_class[i]);
    }
  }

  for (const auto& node : nodes) {
    auto prefix = node.name + ".";
    const auto& c = node.counters;
    for (auto type : all_access_types) {
      auto type_prefix = fmt::format("{}{}.", prefix, to_string(type));
      j[type_prefix + "hits"] = c.hits[index_of(type)];
      j[type_prefix + "misses"] = c.misses[index_of(type)];
    }
    j[prefix + "mshr_merges"] = c.mshr_merges;
    j[prefix + "prefetch.requested"] = c.pf_requested;
    j[prefix + "prefetch.issued"] = c.pf_issued;
    j[prefix + "prefetch.filled"] = c.pf_filled;
    j[prefix + "prefetch.useful"] = c.pf_useful;
    j[prefix + "prefetch.useless"] = c.pf_useless;
    put_ratio(j, prefix + "prefetch.accuracy", node.prefetch_accuracy);
    j[prefix + "fills"] = c.fills;
    j[prefix + "bypasses"] = c.bypasses;
    j[prefix + "writebacks"] = c.writebacks;
    j[prefix + "walk_accesses"] = c.walk_accesses;
    put_ratio(j, prefix + "mpki", node.mpki);
    put_ratio(j, prefix + "average_miss_latency", node.average_miss_latency);
  }

  j["dram.reads"] = dram.counters.reads;
  j["dram.writes"] = dram.counters.writes;
  j["dram.row_hits"] = dram.counters.row_hits;
  j["dram.row_misses"] = dram.counters.row_misses;
  j["dram.cycles"] = dram.counters.cycles;
  put_ratio(j, "dram.row_hit_rate", dram.row_hit_rate);
  for (std::size_t ch = 0; ch < dram.counters.bus_busy_cycles.size(); ++ch) {
    j[fmt::format("dram.channel{}.bus_busy_cycles", ch)] = dram.counters.bus_busy_cycles[ch];
    put_ratio(j, fmt::format("dram.channel{}.bus_busy_fraction", ch), dram.bus_busy_fraction[ch]);
  }
  return j;
}

void SimReport::print_text(std::ostream& out) const
{
  out << "=== Simulation report ===\n";
  for (const auto& core : cores) {
    out << fmt::format("CPU {} instructions: {} cycles: {} IPC: {:.4f}\n", core.cpu, core.instructions, core.cycles, core.ipc.value);
    out << fmt::format("CPU {} branch predictions: {} mispredictions: {} accuracy: {:.4f} MPKI: {:.4f}\n", core.cpu, core.branch_predictions,
                       core.branch_mispredictions, core.branch_accuracy.value, core.branch_mpki.value);
    for (auto cls : all_branch_classes) {
      auto i = index_of(cls);
      if (cls == BranchClass::NOT_BRANCH || core.predictions_by_class[i] == 0)
        continue;
      out << fmt::format("  {:<14} predictions: {:>10} mispredictions: {:>8} MPKI: {:.4f}\n", to_string(cls), core.predictions_by_class[i],
                         core.mispredictions_by_class[i], core.mpki_by_class[i].value);
    }
  }
  out << '\n';
  for (const auto& node : nodes) {
    const auto& c = node.counters;
    out << fmt::format("{} TOTAL access: {:>10} hit: {:>10} miss: {:>10} MPKI: {:.4f}\n", node.name, c.total_hits() + c.total_misses(),
                       c.total_hits(), c.total_misses(), node.mpki.value);
    for (auto type : all_access_types) {
      auto i = index_of(type);
      if (c.hits[i] + c.misses[i] == 0)
        continue;
      out << fmt::format("{} {:<11} access: {:>10} hit: {:>10} miss: {:>10}\n", node.name, to_string(type), c.hits[i] + c.misses[i], c.hits[i],
                         c.misses[i]);
    }
    if (c.pf_requested > 0)
      out << fmt::format("{} PREFETCH requested: {} issued: {} filled: {} useful: {} useless: {} accuracy: {:.4f}\n", node.name, c.pf_requested,
                         c.pf_issued, c.pf_filled, c.pf_useful, c.pf_useless, node.prefetch_accuracy.value);
    if (node.average_miss_latency.defined)
      out << fmt::format("{} AVERAGE MISS LATENCY: {:.2f} cycles\n", node.name, node.average_miss_latency.value);
  }
  out << '\n';
  out << fmt::format("DRAM reads: {} writes: {} row hits: {} row misses: {}\n", dram.counters.reads, dram.counters.writes, dram.counters.row_hits,
                     dram.counters.row_misses);
  for (std::size_t ch = 0; ch < dram.bus_busy_fraction.size(); ++ch)
    out << fmt::format("DRAM channel {} bus busy: {:.4f}\n", ch, dram.bus_busy_fraction[ch].value);
}
} // namespace tracesim
