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

#ifndef TRACESIM_TEST_SUPPORT_H
#define TRACESIM_TEST_SUPPORT_H

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tracesim/config.h"
#include "tracesim/modules.h"
#include "tracesim/reference_modules.h"
#include "tracesim/synthetic.h"
#include "tracesim/system.h"
#include "tracesim/trace.h"

namespace tracesim::test
{
// Record builders
TraceInstruction arith(uint64_t ip);
TraceInstruction load(uint64_t ip, uint64_t address);
TraceInstruction store(uint64_t ip, uint64_t address);
TraceInstruction conditional(uint64_t ip, bool taken);
TraceInstruction jump(uint64_t ip);

std::vector<TraceInstruction> synthetic(SyntheticPattern pattern, uint64_t length, uint64_t seed = 1);

std::unique_ptr<System> make_system(const SystemConfig& config, const ModuleRegistry& registry, std::vector<std::vector<TraceInstruction>> traces);
std::unique_ptr<System> make_system(const SystemConfig& config, std::vector<std::vector<TraceInstruction>> traces);

/// Runs warmup+simulate on a fresh system and returns the JSON report text.
std::string run_report(const SystemConfig& config, const ModuleRegistry& registry, const std::vector<std::vector<TraceInstruction>>& traces,
                       uint64_t warmup, uint64_t simulate);

class TempDir
{
  std::filesystem::path path_;

public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
};

/// Plain two-bit-counter GShare written without reference to the shipped module.
class ScalarGshare
{
  unsigned bits_;
  uint64_t history_ = 0;
  std::vector<int> table_;

  uint64_t slot(uint64_t ip) const;

public:
  explicit ScalarGshare(unsigned bits = 14);
  bool predict(uint64_t ip) const;
  void train(uint64_t ip, bool taken);
};

/// Recency lists per set; front is most recent.
class SoftwareLru
{
  uint64_t sets_;
  uint64_t ways_;
  uint64_t block_;
  std::vector<std::vector<uint64_t>> order_;
  std::vector<std::vector<uint64_t>> tags_; // per way, ~0 when invalid

public:
  struct Result {
    bool hit = false;
    uint64_t way = 0;
  };

  SoftwareLru(uint64_t sets, uint64_t ways, uint64_t block);
  Result access(uint64_t address);
};

/// A lower level that accepts everything and answers when told to.
class FakeLower final : public MemoryPort
{
public:
  std::vector<MemoryPacket> rq, wq, pq;
  std::vector<MemoryPacket> pending;
  bool accepting = true;

  bool add_rq(const MemoryPacket& packet) override { return take(rq, packet); }
  bool add_wq(const MemoryPacket& packet) override { return take(wq, packet); }
  bool add_pq(const MemoryPacket& packet) override { return take(pq, packet); }
  bool can_accept(const MemoryPacket&, QueueKind) const override { return accepting; }

  /// Completes every pending request, visible from `ready_time` on.
  void respond(uint64_t ready_time, uint64_t data = 0);

private:
  bool take(std::vector<MemoryPacket>& log, const MemoryPacket& packet);
};

struct Recorder final : ResponseSink {
  std::vector<MemoryPacket> received;
  void return_data(const MemoryPacket& packet) override { received.push_back(packet); }
};

MemoryPacket read_packet(uint64_t address, ResponseSink* requester, AccessType type = AccessType::READ, uint64_t token = 0);

struct HookCounts {
  uint64_t initialize = 0;
  uint64_t final_stats = 0;
  uint64_t before_initialize = 0;

  uint64_t predict = 0;
  uint64_t train = 0;
  uint64_t btb_predict = 0;
  uint64_t btb_update = 0;

  uint64_t cache_operate = 0;
  uint64_t cache_fill = 0;
  uint64_t fill_bypass = 0;
  uint64_t cycle_operate = 0;
  uint64_t branch_operate = 0;

  uint64_t find_victim = 0;
  uint64_t update_hit = 0;
  uint64_t update_fill = 0;
  std::vector<uint32_t> metadata_seen;
};

/// Hook counters keyed by "<family>:<host>" and filled in by the counting modules below.
struct HookLog {
  std::map<std::string, HookCounts> counts;
  HookCounts& at(const std::string& key) { return counts[key]; }
};

/// Registers counting wrappers named "counting" in every family. Each wraps the matching reference module.
void add_counting_modules(ModuleRegistry& registry, HookLog& log);

/// A replacement policy that bypasses every fill.
class AlwaysBypass final : public ReplacementPolicy
{
public:
  void initialize_replacement() override {}
  uint64_t find_victim(uint32_t, uint64_t, std::span<const CacheBlock> blocks, uint64_t, uint64_t, AccessType) override { return blocks.size(); }
  void update_replacement_state(uint32_t, uint64_t, uint64_t, uint64_t, uint64_t, uint64_t, AccessType, bool) override {}
  void replacement_final_stats(std::ostream&) override {}
};

/// A two-core machine where every module slot names "counting".
SystemConfig counting_config();

/// Loads, stores, conditionals and jumps drawn from a seeded generator.
std::vector<TraceInstruction> mixed_trace(uint64_t length, uint64_t seed);

/// Steps a fresh counting machine and compares hook tallies with the counters. Returns one line per mismatch.
std::vector<std::string> hook_multiplicity_violations(uint64_t steps);

/// Runs fresh counting machines to completion and checks each final-stats hook fired once.
std::vector<std::string> final_stats_violations(uint64_t warmup, uint64_t simulate);

/// Peak resident set size of this process in KiB.
long peak_rss_kib();
} // namespace tracesim::test

#endif
