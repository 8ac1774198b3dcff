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

#ifndef TRACESIM_CACHE_H
#define TRACESIM_CACHE_H

#include <cstdint>
#include <deque>
#include <memory>
#include <queue>
#include <string>
#include <vector>

#include "tracesim/config.h"
#include "tracesim/modules.h"
#include "tracesim/packet.h"
#include "tracesim/stats.h"

namespace tracesim
{
struct AddressParts {
  uint64_t tag = 0;
  uint64_t set = 0;
  uint64_t offset = 0;

  bool operator==(const AddressParts&) const = default;
};

AddressParts decompose_address(uint64_t address, uint64_t sets, uint64_t block_size);

/// Orders returned packets by the time they become visible, then by arrival.
class ResponseInbox
{
  struct Entry {
    uint64_t ready_time;
    uint64_t seq;
    MemoryPacket packet;
    bool operator>(const Entry& other) const { return ready_time != other.ready_time ? ready_time > other.ready_time : seq > other.seq; }
  };
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap_;
  uint64_t seq_ = 0;

public:
  void push(const MemoryPacket& packet) { heap_.push({packet.ready_time, seq_++, packet}); }
  bool has_ready(uint64_t now) const { return !heap_.empty() && heap_.top().ready_time <= now; }
  MemoryPacket pop()
  {
    auto packet = heap_.top().packet;
    heap_.pop();
    return packet;
  }
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
};

/*
 * One cache or TLB level. Requests arrive through the MemoryPort side,
 * completions from the lower level through ResponseSink. TLB nodes look up
 * virtual page addresses tagged with the requesting cpu.
 */
class CacheNode final : public Operable, public MemoryPort, public ResponseSink, public CacheView, public PrefetchIssuer
{
public:
  CacheNode(const CacheNodeConfig& config, uint64_t period_ps, StatsGate& gate, std::unique_ptr<ReplacementPolicy> replacement,
            std::unique_ptr<Prefetcher> prefetcher);

  void set_lower_level(MemoryPort* lower) { lower_ = lower; }
  MemoryPort* lower_level() const { return lower_; }

  /// Calls the initialize hook of each bound module. The owner calls this exactly once.
  void initialize_modules();
  void final_stats(std::ostream& out);
  /// Forwards a branch seen at trace-read time to this node's prefetcher, if any.
  void branch_operate(uint32_t cpu, uint64_t ip, BranchClass branch_class, uint64_t predicted_target);

  // MemoryPort
  bool add_rq(const MemoryPacket& packet) override;
  bool add_wq(const MemoryPacket& packet) override;
  bool add_pq(const MemoryPacket& packet) override;
  bool can_accept(const MemoryPacket& packet, QueueKind queue) const override;

  // ResponseSink
  void return_data(const MemoryPacket& packet) override;

  // Operable
  void operate() override;

  // CacheView
  const std::string& name() const override { return config_.name; }
  const CacheNodeConfig& config() const override { return config_; }
  uint64_t sets() const override { return config_.sets; }
  uint64_t ways() const override { return config_.ways; }
  uint64_t block_size() const override { return config_.block_size; }
  uint64_t current_cycle() const override { return current_cycle_; }
  std::size_t pq_occupancy() const override { return pq_.size(); }
  std::size_t mshr_occupancy() const override { return mshr_.size(); }
  const CacheBlock& block(uint64_t set, uint64_t way) const override { return blocks_.at(set * config_.ways + way); }

  // PrefetchIssuer
  bool issue_prefetch(uint64_t address, bool fill_this_level, uint32_t metadata) override;

  bool is_tlb() const { return config_.kind == NodeKind::tlb; }
  /// The array key used for a packet: block-aligned address, plus the cpu for TLB nodes.
  uint64_t lookup_key(const MemoryPacket& packet) const;
  /// Returns true if the block is present in the array.
  bool probe(uint64_t address, uint32_t cpu = 0) const;

  const NodeCounters& counters() const { return counters_; }
  void reset_counters() { counters_ = NodeCounters{}; }
  uint64_t content_digest() const;
  std::size_t rq_occupancy() const { return rq_.size(); }
  std::size_t wq_occupancy() const { return wq_.size(); }
  bool idle() const;
  bool has_prefetcher() const { return prefetcher_ != nullptr; }

private:
  struct QueueEntry {
    MemoryPacket packet;
    std::vector<MemoryPacket> merged;
  };

  struct MshrEntry {
    uint64_t key = 0;
    MemoryPacket packet; // the packet that allocated the entry
    std::vector<MemoryPacket> waiters;
    uint64_t issue_cycle = 0;
    bool demand = false;
    bool prefetch_only = true;
    bool dirty = false;
    bool returned = false;
    uint64_t fill_cycle = 0;
    uint64_t data = 0;
    uint32_t metadata = 0;
    uint64_t seq = 0;
  };

  enum class Outcome { done, blocked };

  CacheNodeConfig config_;
  StatsGate& gate_;
  std::unique_ptr<ReplacementPolicy> replacement_;
  std::unique_ptr<Prefetcher> prefetcher_;
  MemoryPort* lower_ = nullptr;

  std::vector<CacheBlock> blocks_;
  std::deque<QueueEntry> rq_, wq_, pq_;
  std::vector<MshrEntry> mshr_;
  ResponseInbox inbox_;
  NodeCounters counters_;
  std::array<bool, num_access_types> activates_{};
  uint64_t mshr_seq_ = 0;
  uint32_t prefetch_cpu_ = 0;

  bool counting(uint32_t cpu) const { return gate_.counting(cpu); }
  uint64_t set_of(uint64_t key) const { return (key / config_.block_size) % config_.sets; }
  std::span<CacheBlock> set_blocks(uint64_t set) { return {blocks_.data() + set * config_.ways, config_.ways}; }
  int find_way(uint64_t key) const;
  MshrEntry* find_mshr(uint64_t key);
  const QueueEntry* find_mergeable(const std::deque<QueueEntry>& queue, const MemoryPacket& packet) const;

  bool enqueue(std::deque<QueueEntry>& queue, uint64_t capacity, const MemoryPacket& packet, bool merge);
  bool accept(std::deque<QueueEntry>& queue, uint64_t capacity, const MemoryPacket& packet, bool merge);
  void drain_inbox();
  void handle_fills();
  bool fill(MshrEntry& entry);
  Outcome service(QueueEntry& entry);
  Outcome service_writeback(QueueEntry& entry, uint64_t key);
  bool has_install_room(uint64_t key, bool dirty) const;
  void install(uint64_t key, const MemoryPacket& packet, bool dirty, bool prefetched, uint64_t data, uint32_t metadata);
  uint32_t run_cache_operate(const MemoryPacket& packet, bool hit);
  void respond(const MemoryPacket& packet, uint64_t ready_time, uint64_t data);
  void respond_all(const QueueEntry& entry, uint64_t ready_time, uint64_t data);
  MemoryPacket make_writeback(const CacheBlock& victim) const;
};
} // namespace tracesim

#endif
