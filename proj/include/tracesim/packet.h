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

#ifndef TRACESIM_PACKET_H
#define TRACESIM_PACKET_H

#include <cstdint>

#include "tracesim/types.h"

namespace tracesim
{
class ResponseSink;

/// A request travelling through the hierarchy. Times are in picoseconds of global simulated time.
struct MemoryPacket {
  uint64_t address = 0;   // physical for caches, virtual for TLBs; block-aligned by the receiving node
  uint64_t v_address = 0; // full virtual address of the access that caused the request
  uint64_t ip = 0;
  uint64_t data = 0; // translation result for TLB traffic
  uint64_t instr_id = 0;
  uint32_t cpu = 0;
  uint32_t metadata = 0;
  AccessType type = AccessType::READ;

  bool is_writeback = false;
  bool is_page_walk = false;
  // For PREFETCH packets issued by this node's own prefetcher.
  bool local_prefetch = false;
  bool fill_this_level = true;

  uint64_t enqueue_time = 0;
  uint64_t ready_time = 0;

  // Where the completion goes; null means nobody waits for it.
  ResponseSink* requester = nullptr;
  uint64_t token = 0;
};

class ResponseSink
{
public:
  virtual ~ResponseSink() = default;
  /// packet.ready_time is the earliest time the requester may observe the completion.
  virtual void return_data(const MemoryPacket& packet) = 0;
};

enum class QueueKind { RQ, WQ, PQ };

/// The request side of a node, cache or otherwise.
class MemoryPort
{
public:
  virtual ~MemoryPort() = default;
  virtual bool add_rq(const MemoryPacket& packet) = 0;
  virtual bool add_wq(const MemoryPacket& packet) = 0;
  virtual bool add_pq(const MemoryPacket& packet) = 0;
  /// True when the matching add_* call would succeed right now.
  virtual bool can_accept(const MemoryPacket& packet, QueueKind queue) const = 0;

  bool add(const MemoryPacket& packet, QueueKind queue)
  {
    switch (queue) {
    case QueueKind::RQ:
      return add_rq(packet);
    case QueueKind::WQ:
      return add_wq(packet);
    case QueueKind::PQ:
      return add_pq(packet);
    }
    return false;
  }
};

/// A clocked component. The simulation loop calls operate() once per local cycle.
class Operable
{
protected:
  uint64_t period_ps_;
  uint64_t current_cycle_ = 0;

public:
  explicit Operable(uint64_t period_ps) : period_ps_(period_ps) {}
  virtual ~Operable() = default;

  virtual void operate() = 0;

  void tick()
  {
    operate();
    ++current_cycle_;
  }

  uint64_t period() const { return period_ps_; }
  uint64_t current_cycle() const { return current_cycle_; }
  uint64_t now() const { return current_cycle_ * period_ps_; }
  uint64_t next_edge() const { return current_cycle_ * period_ps_; }
  uint64_t cycles_to_ps(uint64_t cycles) const { return cycles * period_ps_; }
};

/// MHz to an integral clock period in picoseconds.
uint64_t period_from_mhz(uint64_t mhz);
} // namespace tracesim

#endif
