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

#include "tracesim/dram.h"

#include <algorithm>

namespace tracesim
{
DramCoordinates map_address(uint64_t paddr, const DramConfig& config, uint64_t block_size)
{
  DramCoordinates c;
  uint64_t b = paddr / block_size;
  c.column = b % config.columns_per_row;
  b /= config.columns_per_row;
  c.bank = b % config.banks_per_rank;
  b /= config.banks_per_rank;
  c.rank = b % config.ranks_per_channel;
  b /= config.ranks_per_channel;
  c.channel = b % config.channels;
  b /= config.channels;
  c.row = b % config.rows_per_bank;
  return c;
}

uint64_t dram_capacity(const DramConfig& config, uint64_t block_size)
{
  return config.channels * config.ranks_per_channel * config.banks_per_rank * config.rows_per_bank * config.columns_per_row * block_size;
}

Dram::Dram(const DramConfig& config, uint64_t block_size, StatsGate& gate)
    : Operable(period_from_mhz(config.frequency)), config_(config), block_size_(block_size), gate_(gate), channels_(config.channels)
{
  for (auto& ch : channels_)
    ch.banks.resize(config.ranks_per_channel * config.banks_per_rank);
  counters_.bus_busy_cycles.assign(config.channels, 0);
}

void Dram::reset_counters()
{
  counters_ = DramCounters{};
  counters_.bus_busy_cycles.assign(config_.channels, 0);
}

const Dram::Channel& Dram::channel_of(const MemoryPacket& packet) const
{
  return channels_[map_address(packet.address, config_, block_size_).channel];
}

bool Dram::can_accept(const MemoryPacket& packet, QueueKind queue) const
{
  const auto& ch = channel_of(packet);
  if (queue == QueueKind::WQ)
    return ch.wq.size() < config_.wq_size;
  return ch.rq.size() < config_.rq_size;
}

bool Dram::add_rq(const MemoryPacket& packet)
{
  auto where = map_address(packet.address, config_, block_size_);
  auto& ch = channel_of(where);
  if (ch.rq.size() >= config_.rq_size)
    return false;
  ch.rq.push_back({packet, where});
  return true;
}

bool Dram::add_wq(const MemoryPacket& packet)
{
  auto where = map_address(packet.address, config_, block_size_);
  auto& ch = channel_of(where);
  if (ch.wq.size() >= config_.wq_size)
    return false;
  ch.wq.push_back({packet, where});
  return true;
}

bool Dram::idle() const
{
  return std::all_of(channels_.begin(), channels_.end(), [](const Channel& ch) { return ch.rq.empty() && ch.wq.empty(); });
}

void Dram::operate()
{
  if (gate_.any_counting())
    ++counters_.cycles;

  for (auto& ch : channels_) {
    if (ch.wq.size() * 4 >= config_.wq_size * 3)
      ch.draining = true;
    else if (ch.wq.empty())
      ch.draining = false;

    auto& queue = (ch.draining || ch.rq.empty()) ? ch.wq : ch.rq;
    std::optional<std::size_t> oldest, oldest_hit;
    for (std::size_t i = 0; i < queue.size(); ++i) {
      const auto& req = queue[i];
      if (req.packet.ready_time > now())
        continue;
      const auto& bank = bank_of(ch, req.where);
      if (bank.busy_until > current_cycle_)
        continue;
      if (!oldest)
        oldest = i;
      if (bank.open_row == req.where.row) {
        oldest_hit = i;
        break;
      }
    }
    if (oldest_hit)
      schedule(ch, *oldest_hit);
    else if (oldest)
      schedule(ch, *oldest);
  }
}

void Dram::schedule(Channel& ch, std::size_t index)
{
  auto& queue = (ch.draining || ch.rq.empty()) ? ch.wq : ch.rq;
  auto req = queue[index];
  queue.erase(queue.begin() + static_cast<std::ptrdiff_t>(index));

  auto& bank = bank_of(ch, req.where);
  const bool row_hit = bank.open_row == req.where.row;
  uint64_t latency = config_.tCAS;
  if (!row_hit)
    latency += bank.open_row ? config_.tRP + config_.tRCD : config_.tRCD;
  bank.open_row = req.where.row;
  bank.busy_until = current_cycle_ + (latency - config_.tCAS) + config_.burst_cycles_per_block;

  const uint64_t start = std::max(current_cycle_ + latency, ch.bus_free);
  const uint64_t done = start + config_.burst_cycles_per_block;
  ch.bus_free = done;

  const bool is_write = req.packet.type == AccessType::WRITE;
  if (gate_.counting(req.packet.cpu)) {
    ++(is_write ? counters_.writes : counters_.reads);
    ++(row_hit ? counters_.row_hits : counters_.row_misses);
    counters_.bus_busy_cycles[req.where.channel] += config_.burst_cycles_per_block;
  }
  if (record_)
    log_.push_back({req.packet, req.where, current_cycle_, start, done, row_hit});

  if (req.packet.requester != nullptr) {
    auto response = req.packet;
    response.ready_time = cycles_to_ps(done);
    req.packet.requester->return_data(response);
  }
}
} // namespace tracesim
