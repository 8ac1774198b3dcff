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

#ifndef TRACESIM_MODULES_H
#define TRACESIM_MODULES_H

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "tracesim/config.h"
#include "tracesim/types.h"

namespace tracesim
{
struct BranchInfo {
  uint64_t ip = 0;
  BranchClass branch_class = BranchClass::NOT_BRANCH;
  uint64_t target = 0; // 0 if unknown or not taken
  bool taken = false;
};

struct BtbPrediction {
  uint64_t target = 0; // 0 predicts not-taken
  bool always_taken = false;
};

struct PrefetchContext {
  uint64_t address = 0; // block-aligned
  uint64_t ip = 0;
  bool cache_hit = false;
  AccessType access_type = AccessType::READ;
  uint32_t metadata_in = 0;
  uint32_t cpu = 0;
};

struct FillContext {
  uint64_t filled_address = 0;
  uint64_t set = 0;
  uint64_t way = 0; // equals the way count when the fill was bypassed
  bool was_prefetch = false;
  uint64_t evicted_address = 0; // 0 when nothing valid was evicted
  uint32_t metadata = 0;
};

struct CacheBlock {
  bool valid = false;
  bool dirty = false;
  bool prefetched = false;
  uint64_t tag = 0;
  uint64_t address = 0; // block-aligned lookup address
  uint64_t data = 0;
  uint32_t cpu = 0;
};

/// What a core exposes to its branch modules. Nothing here mutates the core.
class CoreView
{
public:
  virtual ~CoreView() = default;
  virtual uint32_t cpu() const = 0;
  virtual const CoreConfig& config() const = 0;
  virtual uint64_t current_cycle() const = 0;
  virtual std::size_t rob_occupancy() const = 0;
};

/// What a cache or TLB exposes to its prefetcher and replacement policy. Nothing here mutates the node.
class CacheView
{
public:
  virtual ~CacheView() = default;
  virtual const std::string& name() const = 0;
  virtual const CacheNodeConfig& config() const = 0;
  virtual uint64_t sets() const = 0;
  virtual uint64_t ways() const = 0;
  virtual uint64_t block_size() const = 0;
  virtual uint64_t current_cycle() const = 0;
  virtual std::size_t pq_occupancy() const = 0;
  virtual std::size_t mshr_occupancy() const = 0;
  virtual const CacheBlock& block(uint64_t set, uint64_t way) const = 0;
};

class PrefetchIssuer
{
public:
  virtual ~PrefetchIssuer() = default;
  virtual bool issue_prefetch(uint64_t address, bool fill_this_level, uint32_t metadata) = 0;
};

class BranchPredictor
{
  const CoreView* host_ = nullptr;

protected:
  const CoreView& host() const { return *host_; }

public:
  virtual ~BranchPredictor() = default;
  void bind(const CoreView& host) { host_ = &host; }

  virtual void initialize_branch_predictor() = 0;
  virtual bool predict_branch(uint64_t ip, uint64_t predicted_target, bool always_taken, BranchClass branch_class) = 0;
  virtual void last_branch_result(uint64_t ip, uint64_t target, bool taken, BranchClass branch_class) = 0;
  virtual void branch_predictor_final_stats(std::ostream& out) = 0;
};

class BranchTargetPredictor
{
  const CoreView* host_ = nullptr;

protected:
  const CoreView& host() const { return *host_; }

public:
  virtual ~BranchTargetPredictor() = default;
  void bind(const CoreView& host) { host_ = &host; }

  virtual void initialize_btb() = 0;
  virtual BtbPrediction btb_prediction(uint64_t ip, BranchClass branch_class) = 0;
  virtual void update_btb(uint64_t ip, uint64_t target, bool taken, BranchClass branch_class) = 0;
  virtual void btb_final_stats(std::ostream& out) = 0;
};

/*
 * Data and instruction prefetchers share this interface. prefetcher_branch_operate
 * is only invoked on the prefetcher bound to a core's L1I.
 *
 * prefetch_line() may be called from any hook. It enqueues a PREFETCH packet in
 * the host's prefetch queue and returns false, with no other effect, when the
 * queue is full.
 */
class Prefetcher
{
  const CacheView* host_ = nullptr;
  PrefetchIssuer* issuer_ = nullptr;

protected:
  const CacheView& host() const { return *host_; }
  bool prefetch_line(uint64_t address, bool fill_this_level, uint32_t metadata) { return issuer_->issue_prefetch(address, fill_this_level, metadata); }

public:
  virtual ~Prefetcher() = default;
  void bind(const CacheView& host, PrefetchIssuer& issuer)
  {
    host_ = &host;
    issuer_ = &issuer;
  }

  virtual void prefetcher_initialize() = 0;
  virtual uint32_t prefetcher_cache_operate(const PrefetchContext& ctx) = 0;
  virtual uint32_t prefetcher_cache_fill(const FillContext& ctx) = 0;
  virtual void prefetcher_cycle_operate() = 0;
  virtual void prefetcher_branch_operate(uint64_t ip, BranchClass branch_class, uint64_t predicted_target) = 0;
  virtual void prefetcher_final_stats(std::ostream& out) = 0;
};

/// find_victim returns a way in [0, ways), or exactly `ways` to bypass the fill.
class ReplacementPolicy
{
  const CacheView* host_ = nullptr;

protected:
  const CacheView& host() const { return *host_; }

public:
  virtual ~ReplacementPolicy() = default;
  void bind(const CacheView& host) { host_ = &host; }

  virtual void initialize_replacement() = 0;
  virtual uint64_t find_victim(uint32_t cpu, uint64_t set, std::span<const CacheBlock> set_blocks, uint64_t ip, uint64_t full_address,
                               AccessType access_type) = 0;
  virtual void update_replacement_state(uint32_t cpu, uint64_t set, uint64_t way, uint64_t full_address, uint64_t ip, uint64_t victim_address,
                                        AccessType access_type, bool hit) = 0;
  virtual void replacement_final_stats(std::ostream& out) = 0;
};

/// Binds module names from the configuration to implementations.
class ModuleRegistry
{
public:
  using BranchPredictorFactory = std::function<std::unique_ptr<BranchPredictor>()>;
  using BtbFactory = std::function<std::unique_ptr<BranchTargetPredictor>()>;
  using PrefetcherFactory = std::function<std::unique_ptr<Prefetcher>()>;
  using ReplacementFactory = std::function<std::unique_ptr<ReplacementPolicy>()>;

  /// A registry holding gshare, basic_btb, next_line, no and lru.
  static ModuleRegistry with_reference_modules();

  // Re-registering a name within a family throws std::invalid_argument.
  void add_branch_predictor(std::string name, BranchPredictorFactory factory);
  void add_btb(std::string name, BtbFactory factory);
  void add_prefetcher(std::string name, PrefetcherFactory factory);
  void add_replacement(std::string name, ReplacementFactory factory);

  // Unknown names throw ConfigError.
  std::unique_ptr<BranchPredictor> make_branch_predictor(std::string_view name) const;
  std::unique_ptr<BranchTargetPredictor> make_btb(std::string_view name) const;
  std::unique_ptr<Prefetcher> make_prefetcher(std::string_view name) const;
  std::unique_ptr<ReplacementPolicy> make_replacement(std::string_view name) const;

  bool has_branch_predictor(std::string_view name) const { return branch_predictors_.contains(name); }
  bool has_btb(std::string_view name) const { return btbs_.contains(name); }
  bool has_prefetcher(std::string_view name) const { return prefetchers_.contains(name); }
  bool has_replacement(std::string_view name) const { return replacements_.contains(name); }

private:
  std::map<std::string, BranchPredictorFactory, std::less<>> branch_predictors_;
  std::map<std::string, BtbFactory, std::less<>> btbs_;
  std::map<std::string, PrefetcherFactory, std::less<>> prefetchers_;
  std::map<std::string, ReplacementFactory, std::less<>> replacements_;
};
} // namespace tracesim

#endif
