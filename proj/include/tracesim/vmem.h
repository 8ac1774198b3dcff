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

#ifndef TRACESIM_VMEM_H
#define TRACESIM_VMEM_H

#include <cstdint>
#include <deque>
#include <unordered_map>
#include <vector>

#include "tracesim/cache.h"
#include "tracesim/packet.h"
#include "tracesim/stats.h"

namespace tracesim
{
/// A keyed bijection on [0, 2^bits).
class FramePermutation
{
  unsigned bits_;
  uint64_t mask_;
  std::array<uint64_t, 3> multipliers_{};
  std::array<uint64_t, 3> offsets_{};

public:
  FramePermutation(unsigned bits, uint64_t seed);
  uint64_t operator()(uint64_t x) const;
};

/*
 * Virtual pages of each cpu map to physical frames on first touch. Frames are
 * handed out in the order of a seed-keyed permutation of the frame space, so
 * the mapping is injective and reproducible.
 */
class PageTable
{
public:
  PageTable(uint64_t num_frames, uint64_t page_size, unsigned levels, uint64_t seed);

  uint64_t frame_of(uint32_t cpu, uint64_t vpage);
  uint64_t translate(uint32_t cpu, uint64_t vaddr) { return frame_of(cpu, vaddr / page_size_) * page_size_ + vaddr % page_size_; }
  /// Physical address of the page table entry consulted at `level` (1 is the root) for a page.
  uint64_t pte_address(uint32_t cpu, uint64_t vpage, unsigned level) const;

  std::size_t mapped_pages() const { return map_.size(); }
  uint64_t num_frames() const { return num_frames_; }
  uint64_t page_size() const { return page_size_; }
  unsigned levels() const { return levels_; }

  static constexpr unsigned bits_per_level = 9;
  static constexpr unsigned va_bits = 48;

private:
  struct KeyHash {
    std::size_t operator()(const std::pair<uint32_t, uint64_t>& k) const { return std::hash<uint64_t>{}(k.second * 0x9e3779b97f4a7c15ULL ^ k.first); }
  };

  uint64_t num_frames_;
  uint64_t page_size_;
  unsigned levels_;
  FramePermutation permutation_;
  uint64_t next_free_ = 0;
  uint64_t pte_base_;
  std::unordered_map<std::pair<uint32_t, uint64_t>, uint64_t, KeyHash> map_;
};

/// Resolves translation misses of one cpu with a series of reads through that cpu's L1D.
class PageTableWalker final : public Operable, public MemoryPort, public ResponseSink
{
public:
  PageTableWalker(uint32_t cpu, uint64_t period_ps, std::size_t queue_size, std::size_t max_walks, PageTable& page_table);

  void set_l1d(MemoryPort* l1d) { l1d_ = l1d; }

  bool add_rq(const MemoryPacket& packet) override;
  bool add_wq(const MemoryPacket&) override { return false; }
  bool add_pq(const MemoryPacket& packet) override { return add_rq(packet); }
  bool can_accept(const MemoryPacket& packet, QueueKind queue) const override;

  void return_data(const MemoryPacket& packet) override { inbox_.push(packet); }
  void operate() override;

  uint64_t walks_completed() const { return walks_completed_; }
  uint64_t reads_issued() const { return reads_issued_; }
  bool idle() const { return queue_.empty() && walks_.empty() && inbox_.empty(); }

private:
  struct Walk {
    uint64_t vpage = 0;
    std::vector<MemoryPacket> waiters;
    unsigned next_level = 1;
    bool outstanding = false;
    uint64_t id = 0;
  };

  uint32_t cpu_;
  std::size_t queue_size_;
  std::size_t max_walks_;
  PageTable& page_table_;
  MemoryPort* l1d_ = nullptr;
  std::deque<MemoryPacket> queue_;
  std::vector<Walk> walks_;
  ResponseInbox inbox_;
  uint64_t next_id_ = 0;
  uint64_t walks_completed_ = 0;
  uint64_t reads_issued_ = 0;

  uint64_t vpage_of(const MemoryPacket& packet) const { return packet.address / page_table_.page_size(); }
  Walk* find_walk(uint64_t vpage);
  bool issue_read(Walk& walk);
};

/// The "ptw" sink of a shared TLB: forwards each request to the walker of the requesting cpu.
class PtwRouter final : public MemoryPort
{
  std::vector<PageTableWalker*> walkers_;

public:
  explicit PtwRouter(std::vector<PageTableWalker*> walkers) : walkers_(std::move(walkers)) {}
  bool add_rq(const MemoryPacket& packet) override { return walkers_.at(packet.cpu)->add_rq(packet); }
  bool add_wq(const MemoryPacket& packet) override { return walkers_.at(packet.cpu)->add_wq(packet); }
  bool add_pq(const MemoryPacket& packet) override { return walkers_.at(packet.cpu)->add_pq(packet); }
  bool can_accept(const MemoryPacket& packet, QueueKind queue) const override { return walkers_.at(packet.cpu)->can_accept(packet, queue); }
};
} // namespace tracesim

#endif
