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

#include "tracesim/vmem.h"

#include <algorithm>
#include <fmt/core.h>

namespace tracesim
{
namespace
{
uint64_t splitmix64(uint64_t& state)
{
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
} // namespace

FramePermutation::FramePermutation(unsigned bits, uint64_t seed) : bits_(bits), mask_(bits >= 64 ? ~uint64_t{0} : (uint64_t{1} << bits) - 1)
{
  uint64_t state = seed;
  for (std::size_t i = 0; i < multipliers_.size(); ++i) {
    multipliers_[i] = splitmix64(state) | 1;
    offsets_[i] = splitmix64(state);
  }
}

uint64_t FramePermutation::operator()(uint64_t x) const
{
  if (bits_ == 0)
    return 0;
  const unsigned shift = bits_ / 2 + 1;
  for (std::size_t i = 0; i < multipliers_.size(); ++i) {
    x = (x * multipliers_[i]) & mask_;
    x ^= x >> shift;
    x = (x + offsets_[i]) & mask_;
  }
  return x;
}

PageTable::PageTable(uint64_t num_frames, uint64_t page_size, unsigned levels, uint64_t seed)
    : num_frames_(num_frames), page_size_(page_size), levels_(levels),
      permutation_(is_power_of_two(num_frames) ? lg2(num_frames) : lg2(num_frames) + 1, seed), pte_base_(num_frames * page_size)
{
  if (num_frames == 0)
    throw ConfigError("physical memory holds no page frames");
}

uint64_t PageTable::frame_of(uint32_t cpu, uint64_t vpage)
{
  auto [it, inserted] = map_.try_emplace({cpu, vpage}, 0);
  if (!inserted)
    return it->second;
  if (next_free_ >= num_frames_) {
    map_.erase(it);
    throw SimulationError(fmt::format("physical memory exhausted: all {} page frames are mapped", num_frames_));
  }
  auto frame = permutation_(next_free_++);
  while (frame >= num_frames_)
    frame = permutation_(frame);
  it->second = frame;
  return frame;
}

uint64_t PageTable::pte_address(uint32_t cpu, uint64_t vpage, unsigned level) const
{
  const unsigned vpn_bits = va_bits - lg2(page_size_);
  const uint64_t vpn = vpage & ((uint64_t{1} << vpn_bits) - 1);
  const uint64_t prefix = vpn >> (bits_per_level * (levels_ - level));
  const uint64_t region = pte_base_ + ((uint64_t{cpu} * levels_ + (level - 1)) << 40);
  return region + prefix * 8;
}

PageTableWalker::PageTableWalker(uint32_t cpu, uint64_t period_ps, std::size_t queue_size, std::size_t max_walks, PageTable& page_table)
    : Operable(period_ps), cpu_(cpu), queue_size_(queue_size), max_walks_(max_walks), page_table_(page_table)
{
}

PageTableWalker::Walk* PageTableWalker::find_walk(uint64_t vpage)
{
  auto it = std::find_if(walks_.begin(), walks_.end(), [vpage](const Walk& w) { return w.vpage == vpage; });
  return it == walks_.end() ? nullptr : &*it;
}

bool PageTableWalker::can_accept(const MemoryPacket& packet, QueueKind queue) const
{
  if (queue == QueueKind::WQ)
    return false;
  auto vpage = vpage_of(packet);
  if (std::any_of(walks_.begin(), walks_.end(), [vpage](const Walk& w) { return w.vpage == vpage; }))
    return true;
  return queue_.size() < queue_size_;
}

bool PageTableWalker::add_rq(const MemoryPacket& packet)
{
  if (packet.cpu != cpu_)
    throw SimulationError(fmt::format("page table walker of cpu {} received a request from cpu {}", cpu_, packet.cpu));
  if (auto* walk = find_walk(vpage_of(packet)); walk != nullptr) {
    walk->waiters.push_back(packet);
    return true;
  }
  if (queue_.size() >= queue_size_)
    return false;
  queue_.push_back(packet);
  return true;
}

bool PageTableWalker::issue_read(Walk& walk)
{
  const auto& origin = walk.waiters.front();
  MemoryPacket read;
  read.address = page_table_.pte_address(cpu_, walk.vpage, walk.next_level);
  read.v_address = origin.v_address;
  read.ip = origin.ip;
  read.instr_id = origin.instr_id;
  read.cpu = cpu_;
  read.type = AccessType::READ;
  read.is_page_walk = true;
  read.enqueue_time = now();
  read.ready_time = now();
  read.requester = this;
  read.token = walk.id;
  if (!l1d_->add_rq(read))
    return false;
  walk.outstanding = true;
  ++reads_issued_;
  return true;
}

void PageTableWalker::operate()
{
  while (inbox_.has_ready(now())) {
    auto response = inbox_.pop();
    auto it = std::find_if(walks_.begin(), walks_.end(), [&response](const Walk& w) { return w.id == response.token; });
    if (it == walks_.end())
      throw SimulationError(fmt::format("page table walker of cpu {} received an unexpected response", cpu_));
    it->outstanding = false;
    if (++it->next_level <= page_table_.levels())
      continue;

    auto frame = page_table_.frame_of(cpu_, it->vpage);
    for (const auto& waiter : it->waiters) {
      if (waiter.requester == nullptr)
        continue;
      auto reply = waiter;
      reply.data = frame;
      reply.ready_time = now();
      waiter.requester->return_data(reply);
    }
    ++walks_completed_;
    walks_.erase(it);
  }

  while (!queue_.empty()) {
    auto vpage = vpage_of(queue_.front());
    if (auto* walk = find_walk(vpage); walk != nullptr) {
      walk->waiters.push_back(queue_.front());
    } else if (walks_.size() < max_walks_) {
      walks_.push_back(Walk{vpage, {queue_.front()}, 1, false, next_id_++});
    } else {
      break;
    }
    queue_.pop_front();
  }

  for (auto& walk : walks_)
    if (!walk.outstanding && !issue_read(walk))
      break;
}
} // namespace tracesim
