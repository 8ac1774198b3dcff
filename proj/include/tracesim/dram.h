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

#ifndef TRACESIM_DRAM_H
#define TRACESIM_DRAM_H

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "tracesim/config.h"
#include "tracesim/packet.h"
#include "tracesim/stats.h"

namespace tracesim
{
struct DramCoordinates {
  uint64_t channel = 0;
  uint64_t rank = 0;
  uint64_t bank = 0;
  uint64_t row = 0;
  uint64_t column = 0;

  bool operator==(const DramCoordinates&) const = default;
};

DramCoordinates map_address(uint64_t paddr, const DramConfig& config, uint64_t block_size);

/// Physical memory capacity in bytes implied by the geometry.
uint64_t dram_capacity(const DramConfig& config, uint64_t block_size);

/*
 * Open-row DRAM with per-channel read and write queues. Each channel issues at
 * most one request per DRAM cycle, preferring the oldest row-buffer hit among
 * requests whose bank is free, and serializes data transfers on its bus.
 */
class Dram final : public Operable, public MemoryPort
{
public:
  struct Completion {
    MemoryPacket packet;
    DramCoordinates where;
    uint64_t issue_cycle = 0;
    uint64_t transfer_start = 0;
    uint64_t done_cycle = 0;
    bool row_hit = false;
  };

  Dram(const DramConfig& config, uint64_t block_size, StatsGate& gate);

  bool add_rq(const MemoryPacket& packet) override;
  bool add_wq(const MemoryPacket& packet) override;
  bool add_pq(const MemoryPacket& packet) override { return add_rq(packet); }
  bool can_accept(const MemoryPacket& packet, QueueKind queue) const override;

  void operate() override;

  const DramCounters& counters() const { return counters_; }
  void reset_counters();
  bool idle() const;

  /// Keeps a record of every issued request, for inspection by tests.
  void record_completions(bool enabled) { record_ = enabled; }
  const std::vector<Completion>& completions() const { return log_; }
  const DramConfig& config() const { return config_; }

private:
  struct Request {
    MemoryPacket packet;
    DramCoordinates where;
  };

  struct Bank {
    std::optional<uint64_t> open_row;
    uint64_t busy_until = 0;
  };

  struct Channel {
    std::deque<Request> rq;
    std::deque<Request> wq;
    std::vector<Bank> banks;
    uint64_t bus_free = 0;
    bool draining = false;
  };

  DramConfig config_;
  uint64_t block_size_;
  StatsGate& gate_;
  std::vector<Channel> channels_;
  DramCounters counters_;
  bool record_ = false;
  std::vector<Completion> log_;

  Channel& channel_of(const DramCoordinates& where) { return channels_[where.channel]; }
  const Channel& channel_of(const MemoryPacket& packet) const;
  Bank& bank_of(Channel& channel, const DramCoordinates& where) { return channel.banks[where.rank * config_.banks_per_rank + where.bank]; }
  void schedule(Channel& channel, std::size_t index);
};
} // namespace tracesim

#endif
