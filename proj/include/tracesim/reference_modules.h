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

#ifndef TRACESIM_REFERENCE_MODULES_H
#define TRACESIM_REFERENCE_MODULES_H

#include <cstdint>
#include <vector>

#include "tracesim/modules.h"

namespace tracesim
{
/// Two-bit counters indexed by the folded instruction pointer XOR global history.
class GsharePredictor final : public BranchPredictor
{
  unsigned history_bits_;
  uint64_t history_ = 0;
  std::vector<uint8_t> counters_;

public:
  static constexpr unsigned default_history_bits = 14;
  static constexpr uint8_t counter_max = 3;
  static constexpr uint8_t counter_init = 1;

  explicit GsharePredictor(unsigned history_bits = default_history_bits);

  uint64_t index(uint64_t ip) const;
  uint8_t counter(uint64_t ip) const { return counters_[index(ip)]; }
  uint64_t history() const { return history_; }

  void initialize_branch_predictor() override;
  bool predict_branch(uint64_t ip, uint64_t predicted_target, bool always_taken, BranchClass branch_class) override;
  void last_branch_result(uint64_t ip, uint64_t target, bool taken, BranchClass branch_class) override;
  void branch_predictor_final_stats(std::ostream&) override {}
};

/// Set-associative LRU branch target buffer. Only taken branches allocate.
class BasicBtb final : public BranchTargetPredictor
{
  struct Entry {
    bool valid = false;
    uint64_t ip = 0;
    uint64_t target = 0;
    bool always_taken = true;
    uint64_t last_used = 0;
  };

  uint64_t sets_;
  uint64_t ways_;
  uint64_t access_clock_ = 0;
  std::vector<Entry> entries_;

  uint64_t set_of(uint64_t ip) const { return (ip >> 2) % sets_; }
  Entry* find(uint64_t ip);

public:
  static constexpr uint64_t default_sets = 1024;
  static constexpr uint64_t default_ways = 4;

  BasicBtb(uint64_t sets = default_sets, uint64_t ways = default_ways);

  void initialize_btb() override;
  BtbPrediction btb_prediction(uint64_t ip, BranchClass branch_class) override;
  void update_btb(uint64_t ip, uint64_t target, bool taken, BranchClass branch_class) override;
  void btb_final_stats(std::ostream&) override {}
};

class NextLinePrefetcher final : public Prefetcher
{
public:
  void prefetcher_initialize() override {}
  uint32_t prefetcher_cache_operate(const PrefetchContext& ctx) override;
  uint32_t prefetcher_cache_fill(const FillContext&) override { return 0; }
  void prefetcher_cycle_operate() override {}
  void prefetcher_branch_operate(uint64_t, BranchClass, uint64_t) override {}
  void prefetcher_final_stats(std::ostream&) override {}
};

class NoPrefetcher final : public Prefetcher
{
public:
  void prefetcher_initialize() override {}
  uint32_t prefetcher_cache_operate(const PrefetchContext&) override { return 0; }
  uint32_t prefetcher_cache_fill(const FillContext&) override { return 0; }
  void prefetcher_cycle_operate() override {}
  void prefetcher_branch_operate(uint64_t, BranchClass, uint64_t) override {}
  void prefetcher_final_stats(std::ostream&) override {}
};

/// Invalid ways first, then least recently hit or filled.
class LruReplacement final : public ReplacementPolicy
{
  uint64_t ways_ = 0;
  uint64_t clock_ = 0;
  std::vector<uint64_t> last_used_;

public:
  void initialize_replacement() override;
  uint64_t find_victim(uint32_t cpu, uint64_t set, std::span<const CacheBlock> set_blocks, uint64_t ip, uint64_t full_address,
                       AccessType access_type) override;
  void update_replacement_state(uint32_t cpu, uint64_t set, uint64_t way, uint64_t full_address, uint64_t ip, uint64_t victim_address,
                                AccessType access_type, bool hit) override;
  void replacement_final_stats(std::ostream&) override {}
};
} // namespace tracesim

#endif
