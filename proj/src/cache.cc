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

#include "tracesim/cache.h"

#include <algorithm>
#include <fmt/core.h>
#include <ostream>
#include <tuple>

namespace tracesim
{
AddressParts decompose_address(uint64_t address, uint64_t sets, uint64_t block_size)
{
  return {address / (block_size * sets), (address / block_size) % sets, address % block_size};
}

CacheNode::CacheNode(const CacheNodeConfig& config, uint64_t period_ps, StatsGate& gate, std::unique_ptr<ReplacementPolicy> replacement,
                     std::unique_ptr<Prefetcher> prefetcher)
    : Operable(period_ps), config_(config), gate_(gate), replacement_(std::move(replacement)), prefetcher_(std::move(prefetcher)),
      blocks_(config.sets * config.ways)
{
  if (!replacement_)
    throw ConfigError(fmt::format("{}: a replacement policy is required", config_.name));
  for (auto type : config_.prefetch_activate_on)
    activates_[index_of(type)] = true;
  replacement_->bind(*this);
  if (prefetcher_)
    prefetcher_->bind(*this, *this);
}

void CacheNode::initialize_modules()
{
  replacement_->initialize_replacement();
  if (prefetcher_)
    prefetcher_->prefetcher_initialize();
}

void CacheNode::final_stats(std::ostream& out)
{
  if (prefetcher_)
    prefetcher_->prefetcher_final_stats(out);
  replacement_->replacement_final_stats(out);
}

void CacheNode::branch_operate(uint32_t cpu, uint64_t ip, BranchClass branch_class, uint64_t predicted_target)
{
  if (!prefetcher_)
    return;
  prefetch_cpu_ = cpu;
  prefetcher_->prefetcher_branch_operate(ip, branch_class, predicted_target);
}

uint64_t CacheNode::lookup_key(const MemoryPacket& packet) const
{
  auto key = align_down(packet.address, config_.block_size);
  if (is_tlb())
    key |= uint64_t{packet.cpu} << 56;
  return key;
}

bool CacheNode::probe(uint64_t address, uint32_t cpu) const
{
  MemoryPacket packet;
  packet.address = address;
  packet.cpu = cpu;
  return find_way(lookup_key(packet)) >= 0;
}

int CacheNode::find_way(uint64_t key) const
{
  auto base = set_of(key) * config_.ways;
  for (uint64_t way = 0; way < config_.ways; ++way) {
    const auto& b = blocks_[base + way];
    if (b.valid && b.address == key)
      return static_cast<int>(way);
  }
  return -1;
}

CacheNode::MshrEntry* CacheNode::find_mshr(uint64_t key)
{
  auto it = std::find_if(mshr_.begin(), mshr_.end(), [key](const MshrEntry& e) { return e.key == key; });
  return it == mshr_.end() ? nullptr : &*it;
}

const CacheNode::QueueEntry* CacheNode::find_mergeable(const std::deque<QueueEntry>& queue, const MemoryPacket& packet) const
{
  auto key = lookup_key(packet);
  for (const auto& entry : queue) {
    const auto& p = entry.packet;
    if (p.type == packet.type && p.fill_this_level == packet.fill_this_level && lookup_key(p) == key)
      return &entry;
  }
  return nullptr;
}

bool CacheNode::enqueue(std::deque<QueueEntry>& queue, uint64_t capacity, const MemoryPacket& packet, bool merge)
{
  if (merge) {
    if (auto* existing = find_mergeable(queue, packet); existing != nullptr) {
      const_cast<QueueEntry*>(existing)->merged.push_back(packet);
      return true;
    }
  }
  if (queue.size() >= capacity)
    return false;
  queue.push_back({packet, {}});
  return true;
}

bool CacheNode::accept(std::deque<QueueEntry>& queue, uint64_t capacity, const MemoryPacket& packet, bool merge)
{
  if (!enqueue(queue, capacity, packet, merge))
    return false;
  if (packet.is_page_walk && counting(packet.cpu))
    ++counters_.walk_accesses;
  return true;
}

bool CacheNode::add_rq(const MemoryPacket& packet) { return accept(rq_, config_.rq_size, packet, true); }
bool CacheNode::add_wq(const MemoryPacket& packet) { return accept(wq_, config_.wq_size, packet, false); }
bool CacheNode::add_pq(const MemoryPacket& packet) { return accept(pq_, config_.pq_size, packet, true); }

bool CacheNode::can_accept(const MemoryPacket& packet, QueueKind queue) const
{
  switch (queue) {
  case QueueKind::RQ:
    return rq_.size() < config_.rq_size || find_mergeable(rq_, packet) != nullptr;
  case QueueKind::WQ:
    return wq_.size() < config_.wq_size;
  case QueueKind::PQ:
    return pq_.size() < config_.pq_size || find_mergeable(pq_, packet) != nullptr;
  }
  return false;
}

bool CacheNode::issue_prefetch(uint64_t address, bool fill_this_level, uint32_t metadata)
{
  if (counting(prefetch_cpu_))
    ++counters_.pf_requested;

  MemoryPacket packet;
  packet.address = align_down(address, config_.block_size);
  packet.v_address = packet.address;
  packet.cpu = prefetch_cpu_;
  packet.type = AccessType::PREFETCH;
  packet.local_prefetch = true;
  packet.fill_this_level = fill_this_level;
  packet.metadata = metadata;
  packet.enqueue_time = now();
  packet.ready_time = now();
  if (!add_pq(packet))
    return false;
  if (counting(prefetch_cpu_))
    ++counters_.pf_issued;
  return true;
}

void CacheNode::return_data(const MemoryPacket& packet) { inbox_.push(packet); }

bool CacheNode::idle() const { return rq_.empty() && wq_.empty() && pq_.empty() && mshr_.empty() && inbox_.empty(); }

void CacheNode::operate()
{
  drain_inbox();
  handle_fills();

  for (uint64_t lookups = 0; lookups < config_.max_tag_lookups_per_cycle; ++lookups) {
    std::deque<QueueEntry>* queue = nullptr;
    for (auto* candidate : {&rq_, &wq_, &pq_}) {
      if (!candidate->empty() && candidate->front().packet.ready_time <= now()) {
        queue = candidate;
        break;
      }
    }
    if (queue == nullptr || service(queue->front()) == Outcome::blocked)
      break;

    auto cpu = queue->front().packet.cpu;
    if (counting(cpu)) {
      if (queue == &rq_)
        ++counters_.serviced_rq;
      else if (queue == &wq_)
        ++counters_.serviced_wq;
      else
        ++counters_.serviced_pq;
    }
    queue->pop_front();
  }

  if (prefetcher_)
    prefetcher_->prefetcher_cycle_operate();
}

void CacheNode::drain_inbox()
{
  while (inbox_.has_ready(now())) {
    auto packet = inbox_.pop();
    auto* entry = find_mshr(lookup_key(packet));
    if (entry == nullptr || entry->returned)
      throw SimulationError(fmt::format("{}: response for address {:#x} without an outstanding miss", config_.name, packet.address));
    entry->returned = true;
    entry->fill_cycle = current_cycle_ + config_.fill_latency;
    entry->data = packet.data;
    entry->metadata = packet.metadata;
  }
}

void CacheNode::handle_fills()
{
  while (true) {
    auto best = mshr_.end();
    for (auto it = mshr_.begin(); it != mshr_.end(); ++it) {
      if (!it->returned || it->fill_cycle > current_cycle_)
        continue;
      if (best == mshr_.end() || std::tie(it->fill_cycle, it->seq) < std::tie(best->fill_cycle, best->seq))
        best = it;
    }
    if (best == mshr_.end() || !fill(*best))
      return;
    mshr_.erase(best);
  }
}

bool CacheNode::fill(MshrEntry& entry)
{
  const bool prefetched = entry.packet.type == AccessType::PREFETCH && entry.prefetch_only;
  if (!has_install_room(entry.key, entry.dirty))
    return false;

  install(entry.key, entry.packet, entry.dirty, prefetched, entry.data, entry.metadata);

  auto cpu = entry.packet.cpu;
  if (counting(cpu)) {
    ++counters_.miss_completions;
    if (entry.demand) {
      counters_.demand_miss_latency += current_cycle_ - entry.issue_cycle;
      ++counters_.demand_miss_count;
    }
  }
  for (const auto& waiter : entry.waiters)
    respond(waiter, now(), entry.data);
  return true;
}

bool CacheNode::has_install_room(uint64_t key, bool dirty) const
{
  if (lower_ == nullptr)
    return true;
  MemoryPacket probe_packet;
  probe_packet.type = AccessType::WRITE;
  probe_packet.is_writeback = true;
  if (lower_->can_accept(probe_packet, QueueKind::WQ))
    return true;
  if (dirty)
    return false;
  auto base = set_of(key) * config_.ways;
  return std::none_of(blocks_.begin() + static_cast<std::ptrdiff_t>(base), blocks_.begin() + static_cast<std::ptrdiff_t>(base + config_.ways),
                      [](const CacheBlock& b) { return b.valid && b.dirty; });
}

void CacheNode::install(uint64_t key, const MemoryPacket& packet, bool dirty, bool prefetched, uint64_t data, uint32_t metadata)
{
  auto set = set_of(key);
  auto blocks = set_blocks(set);
  auto way = replacement_->find_victim(packet.cpu, set, std::span<const CacheBlock>(blocks), packet.ip, packet.address, packet.type);
  if (way > config_.ways)
    throw ModuleContractError(fmt::format("{}: replacement policy '{}' returned way {} for a {}-way set", config_.name, config_.replacement, way,
                                          config_.ways));

  const bool count = counting(packet.cpu);
  uint64_t victim_address = 0;
  if (way == config_.ways) {
    if (dirty) {
      CacheBlock self{true, true, false, 0, key, data, packet.cpu};
      lower_->add_wq(make_writeback(self));
      if (count)
        ++counters_.writebacks;
    }
    if (count)
      ++counters_.bypasses;
  } else {
    auto& victim = blocks[way];
    if (victim.valid) {
      victim_address = victim.address;
      if (victim.dirty) {
        lower_->add_wq(make_writeback(victim));
        if (counting(victim.cpu))
          ++counters_.writebacks;
      }
      if (victim.prefetched && counting(victim.cpu))
        ++counters_.pf_useless;
    }
    victim = CacheBlock{true, dirty, prefetched, decompose_address(key, config_.sets, config_.block_size).tag, key, data, packet.cpu};
    if (count) {
      ++counters_.fills;
      if (prefetched)
        ++counters_.pf_filled;
    }
  }

  replacement_->update_replacement_state(packet.cpu, set, way, packet.address, packet.ip, victim_address, packet.type, false);
  if (prefetcher_) {
    prefetch_cpu_ = packet.cpu;
    prefetcher_->prefetcher_cache_fill(FillContext{key, set, way, packet.type == AccessType::PREFETCH, victim_address, metadata});
  }
}

uint32_t CacheNode::run_cache_operate(const MemoryPacket& packet, bool hit)
{
  if (!prefetcher_ || packet.local_prefetch || !activates_[index_of(packet.type)])
    return packet.metadata;
  prefetch_cpu_ = packet.cpu;
  return prefetcher_->prefetcher_cache_operate(
      PrefetchContext{align_down(packet.address, config_.block_size), packet.ip, hit, packet.type, packet.metadata, packet.cpu});
}

void CacheNode::respond(const MemoryPacket& packet, uint64_t ready_time, uint64_t data)
{
  if (packet.requester == nullptr)
    return;
  auto response = packet;
  response.ready_time = ready_time;
  response.data = data;
  packet.requester->return_data(response);
}

void CacheNode::respond_all(const QueueEntry& entry, uint64_t ready_time, uint64_t data)
{
  respond(entry.packet, ready_time, data);
  for (const auto& other : entry.merged)
    respond(other, ready_time, data);
}

MemoryPacket CacheNode::make_writeback(const CacheBlock& victim) const
{
  MemoryPacket packet;
  packet.address = victim.address;
  packet.v_address = victim.address;
  packet.cpu = victim.cpu;
  packet.type = AccessType::WRITE;
  packet.is_writeback = true;
  packet.enqueue_time = now();
  packet.ready_time = now();
  return packet;
}

CacheNode::Outcome CacheNode::service(QueueEntry& entry)
{
  const auto& packet = entry.packet;
  const auto key = lookup_key(packet);
  const auto type_index = index_of(packet.type);
  const bool count = counting(packet.cpu);

  if (packet.type == AccessType::WRITE && packet.is_writeback)
    return service_writeback(entry, key);

  if (auto way = find_way(key); way >= 0) {
    auto set = set_of(key);
    auto& blk = blocks_[set * config_.ways + static_cast<uint64_t>(way)];
    if (count)
      ++counters_.hits[type_index];
    replacement_->update_replacement_state(packet.cpu, set, static_cast<uint64_t>(way), packet.address, packet.ip, 0, packet.type, true);
    if (packet.type != AccessType::PREFETCH && blk.prefetched) {
      blk.prefetched = false;
      if (count)
        ++counters_.pf_useful;
    }
    if (packet.type == AccessType::WRITE)
      blk.dirty = true;
    auto data = blk.data;
    run_cache_operate(packet, true);
    respond_all(entry, now() + cycles_to_ps(config_.hit_latency), data);
    return Outcome::done;
  }

  if (auto* pending = find_mshr(key); pending != nullptr) {
    if (count) {
      ++counters_.misses[type_index];
      ++counters_.mshr_merges;
    }
    if (packet.type != AccessType::PREFETCH) {
      pending->demand = true;
      pending->prefetch_only = false;
    }
    if (packet.type == AccessType::WRITE)
      pending->dirty = true;
    pending->waiters.push_back(packet);
    pending->waiters.insert(pending->waiters.end(), entry.merged.begin(), entry.merged.end());
    run_cache_operate(packet, false);
    return Outcome::done;
  }

  const bool fills_here = packet.type != AccessType::PREFETCH || packet.fill_this_level;
  if (fills_here && mshr_.size() >= config_.mshr_size)
    return Outcome::blocked;

  MemoryPacket forward = packet;
  forward.address = align_down(packet.address, config_.block_size);
  forward.requester = fills_here ? this : nullptr;
  forward.local_prefetch = false;
  forward.fill_this_level = true;
  forward.enqueue_time = now();
  forward.ready_time = now();

  QueueKind queue = QueueKind::RQ;
  if (packet.type == AccessType::PREFETCH)
    queue = (config_.prefetch_as_fill_here || !fills_here) ? QueueKind::PQ : QueueKind::RQ;
  else if (packet.type == AccessType::WRITE)
    forward.type = AccessType::READ;

  if (!lower_->can_accept(forward, queue))
    return Outcome::blocked;

  if (count)
    ++counters_.misses[type_index];
  forward.metadata = run_cache_operate(packet, false);
  if (!lower_->add(forward, queue))
    throw SimulationError(fmt::format("{}: lower level refused a packet it reported room for", config_.name));

  if (fills_here) {
    MshrEntry miss;
    miss.key = key;
    miss.packet = packet;
    miss.waiters.push_back(packet);
    miss.waiters.insert(miss.waiters.end(), entry.merged.begin(), entry.merged.end());
    miss.issue_cycle = current_cycle_;
    miss.demand = packet.type != AccessType::PREFETCH;
    miss.prefetch_only = packet.type == AccessType::PREFETCH;
    miss.dirty = packet.type == AccessType::WRITE;
    miss.seq = mshr_seq_++;
    mshr_.push_back(std::move(miss));
  }
  return Outcome::done;
}

CacheNode::Outcome CacheNode::service_writeback(QueueEntry& entry, uint64_t key)
{
  const auto& packet = entry.packet;
  const bool count = counting(packet.cpu);
  const auto type_index = index_of(AccessType::WRITE);

  if (auto way = find_way(key); way >= 0) {
    auto set = set_of(key);
    blocks_[set * config_.ways + static_cast<uint64_t>(way)].dirty = true;
    if (count)
      ++counters_.hits[type_index];
    replacement_->update_replacement_state(packet.cpu, set, static_cast<uint64_t>(way), packet.address, packet.ip, 0, packet.type, true);
    run_cache_operate(packet, true);
    respond_all(entry, now() + cycles_to_ps(config_.hit_latency), 0);
    return Outcome::done;
  }

  if (auto* pending = find_mshr(key); pending != nullptr) {
    pending->dirty = true;
    if (count) {
      ++counters_.misses[type_index];
      ++counters_.mshr_merges;
    }
    run_cache_operate(packet, false);
    respond_all(entry, now(), 0);
    return Outcome::done;
  }

  if (!has_install_room(key, true))
    return Outcome::blocked;
  if (count) {
    ++counters_.misses[type_index];
    ++counters_.miss_completions;
  }
  auto metadata = run_cache_operate(packet, false);
  install(key, packet, true, false, 0, metadata);
  respond_all(entry, now(), 0);
  return Outcome::done;
}

uint64_t CacheNode::content_digest() const
{
  uint64_t hash = 0xcbf29ce484222325ULL;
  auto mix = [&hash](uint64_t value) {
    hash ^= value;
    hash *= 0x100000001b3ULL;
  };
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (!blocks_[i].valid)
      continue;
    mix(i);
    mix(blocks_[i].address);
    mix(blocks_[i].data);
  }
  return hash;
}
} // namespace tracesim
