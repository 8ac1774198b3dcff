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

#include "tracesim/reference_modules.h"

#include <algorithm>

namespace tracesim
{
GsharePredictor::GsharePredictor(unsigned history_bits) : history_bits_(history_bits), counters_(std::size_t{1} << history_bits, counter_init) {}

uint64_t GsharePredictor::index(uint64_t ip) const
{
  const uint64_t mask = (uint64_t{1} << history_bits_) - 1;
  uint64_t folded = 0;
  for (uint64_t rest = ip; rest != 0; rest >>= history_bits_)
    folded ^= rest & mask;
  return (folded ^ history_) & mask;
}

void GsharePredictor::initialize_branch_predictor()
{
  std::fill(counters_.begin(), counters_.end(), counter_init);
  history_ = 0;
}

bool GsharePredictor::predict_branch(uint64_t ip, uint64_t, bool, BranchClass) { return counters_[index(ip)] >= 2; }

void GsharePredictor::last_branch_result(uint64_t ip, uint64_t, bool taken, BranchClass)
{
  auto& ctr = counters_[index(ip)];
  if (taken && ctr < counter_max)
    ++ctr;
  else if (!taken && ctr > 0)
    --ctr;
  history_ = ((history_ << 1) | (taken ? 1 : 0)) & ((uint64_t{1} << history_bits_) - 1);
}

BasicBtb::BasicBtb(uint64_t sets, uint64_t ways) : sets_(sets), ways_(ways), entries_(sets * ways) {}

BasicBtb::Entry* BasicBtb::find(uint64_t ip)
{
  auto begin = entries_.begin() + static_cast<std::ptrdiff_t>(set_of(ip) * ways_);
  auto it = std::find_if(begin, begin + static_cast<std::ptrdiff_t>(ways_), [ip](const Entry& e) { return e.valid && e.ip == ip; });
  return it == begin + static_cast<std::ptrdiff_t>(ways_) ? nullptr : &*it;
}

void BasicBtb::initialize_btb()
{
  std::fill(entries_.begin(), entries_.end(), Entry{});
  access_clock_ = 0;
}

BtbPrediction BasicBtb::btb_prediction(uint64_t ip, BranchClass)
{
  auto* entry = find(ip);
  if (entry == nullptr)
    return {};
  entry->last_used = ++access_clock_;
  return {entry->target, entry->always_taken};
}

void BasicBtb::update_btb(uint64_t ip, uint64_t target, bool taken, BranchClass)
{
  auto* entry = find(ip);
  if (entry != nullptr) {
    if (taken)
      entry->target = target;
    else
      entry->always_taken = false;
    entry->last_used = ++access_clock_;
    return;
  }
  if (!taken)
    return;

  auto begin = entries_.begin() + static_cast<std::ptrdiff_t>(set_of(ip) * ways_);
  auto end = begin + static_cast<std::ptrdiff_t>(ways_);
  auto victim = std::find_if(begin, end, [](const Entry& e) { return !e.valid; });
  if (victim == end)
    victim = std::min_element(begin, end, [](const Entry& a, const Entry& b) { return a.last_used < b.last_used; });
  *victim = Entry{true, ip, target, true, ++access_clock_};
}

uint32_t NextLinePrefetcher::prefetcher_cache_operate(const PrefetchContext& ctx)
{
  auto block = host().block_size();
  prefetch_line(align_down(ctx.address, block) + block, true, 0);
  return 0;
}

void LruReplacement::initialize_replacement()
{
  ways_ = host().ways();
  last_used_.assign(host().sets() * ways_, 0);
  clock_ = 0;
}

uint64_t LruReplacement::find_victim(uint32_t, uint64_t set, std::span<const CacheBlock> set_blocks, uint64_t, uint64_t, AccessType)
{
  auto invalid = std::find_if(set_blocks.begin(), set_blocks.end(), [](const CacheBlock& b) { return !b.valid; });
  if (invalid != set_blocks.end())
    return static_cast<uint64_t>(std::distance(set_blocks.begin(), invalid));

  auto begin = last_used_.begin() + static_cast<std::ptrdiff_t>(set * ways_);
  return static_cast<uint64_t>(std::distance(begin, std::min_element(begin, begin + static_cast<std::ptrdiff_t>(ways_))));
}

void LruReplacement::update_replacement_state(uint32_t, uint64_t set, uint64_t way, uint64_t, uint64_t, uint64_t, AccessType, bool)
{
  if (way < ways_)
    last_used_[set * ways_ + way] = ++clock_;
}
} // namespace tracesim
