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

#include <catch_amalgamated.hpp>

#include <random>

#include "test_support.h"
#include "tracesim/reference_modules.h"

using namespace tracesim;
using namespace tracesim::test;

namespace
{
struct StubCore final : CoreView {
  CoreConfig cfg;
  uint32_t cpu() const override { return 0; }
  const CoreConfig& config() const override { return cfg; }
  uint64_t current_cycle() const override { return 0; }
  std::size_t rob_occupancy() const override { return 0; }
};

struct StubCache final : CacheView {
  CacheNodeConfig cfg;
  std::vector<CacheBlock> blocks;
  StubCache(uint64_t sets, uint64_t ways)
  {
    cfg.name = "stub";
    cfg.sets = sets;
    cfg.ways = ways;
    blocks.resize(sets * ways);
  }
  const std::string& name() const override { return cfg.name; }
  const CacheNodeConfig& config() const override { return cfg; }
  uint64_t sets() const override { return cfg.sets; }
  uint64_t ways() const override { return cfg.ways; }
  uint64_t block_size() const override { return cfg.block_size; }
  uint64_t current_cycle() const override { return 0; }
  std::size_t pq_occupancy() const override { return 0; }
  std::size_t mshr_occupancy() const override { return 0; }
  const CacheBlock& block(uint64_t set, uint64_t way) const override { return blocks[set * cfg.ways + way]; }
};
} // namespace

TEST_CASE("fresh gshare predicts not taken everywhere", "[gshare]")
{
  GsharePredictor p;
  p.initialize_branch_predictor();
  std::mt19937_64 rng{1};
  for (int i = 0; i < 1000; ++i)
    CHECK_FALSE(p.predict_branch(rng(), 0, true, BranchClass::CONDITIONAL));
}

TEST_CASE("two taken trainings flip the counter", "[gshare]")
{
  GsharePredictor p{1};
  p.initialize_branch_predictor();
  // With one history bit the index after a taken outcome is fold(ip) ^ 1.
  const uint64_t ip = 0x400;
  p.last_branch_result(ip, 0, true, BranchClass::CONDITIONAL);
  p.last_branch_result(ip, 0, true, BranchClass::CONDITIONAL);
  CHECK(p.predict_branch(ip, 0, false, BranchClass::CONDITIONAL));
}

TEST_CASE("counters saturate at 3", "[gshare]")
{
  GsharePredictor p{4};
  p.initialize_branch_predictor();
  for (int i = 0; i < 10; ++i)
    p.last_branch_result(0, 0, true, BranchClass::CONDITIONAL);
  CHECK(p.counter(0) == 3);
  for (int i = 0; i < 10; ++i)
    p.last_branch_result(0, 0, false, BranchClass::CONDITIONAL);
  CHECK(p.counter(0) == 0);
}

TEST_CASE("counter values stay in range under random training", "[gshare][property]")
{
  GsharePredictor p{6};
  p.initialize_branch_predictor();
  std::mt19937_64 rng{9};
  for (int i = 0; i < 50000; ++i) {
    auto ip = rng() % 4096;
    p.last_branch_result(ip, 0, rng() & 1, BranchClass::CONDITIONAL);
    CHECK(p.counter(ip) <= 3);
    CHECK(p.history() < 64);
  }
}

TEST_CASE("gshare agrees with the scalar oracle", "[gshare][oracle]")
{
  GsharePredictor p;
  p.initialize_branch_predictor();
  ScalarGshare oracle;
  std::mt19937_64 rng{5};
  std::vector<uint64_t> ips;
  for (int i = 0; i < 64; ++i)
    ips.push_back(0x400000 + 4 * (rng() % 100000));
  uint64_t agree = 0;
  for (int i = 0; i < 100000; ++i) {
    auto ip = ips[rng() % ips.size()];
    bool taken = (rng() % 100) < 70;
    agree += p.predict_branch(ip, 0, false, BranchClass::CONDITIONAL) == oracle.predict(ip);
    p.last_branch_result(ip, 0, taken, BranchClass::CONDITIONAL);
    oracle.train(ip, taken);
  }
  CHECK(agree == 100000);
}

TEST_CASE("alternating branch is learned through history", "[gshare]")
{
  GsharePredictor p{1};
  p.initialize_branch_predictor();
  uint64_t correct = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    bool taken = i % 2 == 0;
    bool guess = p.predict_branch(0x40, 0, false, BranchClass::CONDITIONAL);
    if (i >= 100)
      correct += guess == taken;
    p.last_branch_result(0x40, 0, taken, BranchClass::CONDITIONAL);
  }
  CHECK(static_cast<double>(correct) / (n - 100) >= 0.9);
}

TEST_CASE("btb lookups and updates", "[btb]")
{
  BasicBtb btb{4, 2};
  btb.initialize_btb();
  auto cold = btb.btb_prediction(0x400, BranchClass::DIRECT_JUMP);
  CHECK(cold.target == 0);
  CHECK_FALSE(cold.always_taken);

  btb.update_btb(0x400, 0x800, true, BranchClass::DIRECT_JUMP);
  CHECK(btb.btb_prediction(0x400, BranchClass::DIRECT_JUMP).target == 0x800);

  btb.update_btb(0x500, 0x900, false, BranchClass::CONDITIONAL);
  CHECK(btb.btb_prediction(0x500, BranchClass::CONDITIONAL).target == 0);

  btb.update_btb(0x400, 0x800, false, BranchClass::CONDITIONAL);
  auto after_nt = btb.btb_prediction(0x400, BranchClass::CONDITIONAL);
  CHECK(after_nt.target == 0x800);
  CHECK_FALSE(after_nt.always_taken);
}

TEST_CASE("btb evicts the least recently used entry of a set", "[btb]")
{
  BasicBtb btb{4, 2};
  btb.initialize_btb();
  // ips 0x0, 0x10, 0x20 all map to set 0 of 4 ((ip >> 2) % 4).
  btb.update_btb(0x00, 0xA0, true, BranchClass::DIRECT_JUMP);
  btb.update_btb(0x10, 0xB0, true, BranchClass::DIRECT_JUMP);
  btb.btb_prediction(0x00, BranchClass::DIRECT_JUMP);
  btb.update_btb(0x20, 0xC0, true, BranchClass::DIRECT_JUMP);
  CHECK(btb.btb_prediction(0x00, BranchClass::DIRECT_JUMP).target == 0xA0);
  CHECK(btb.btb_prediction(0x10, BranchClass::DIRECT_JUMP).target == 0);
  CHECK(btb.btb_prediction(0x20, BranchClass::DIRECT_JUMP).target == 0xC0);
}

TEST_CASE("btb keeps the last target until evicted", "[btb][property]")
{
  BasicBtb btb{8, 2};
  btb.initialize_btb();
  std::mt19937_64 rng{11};
  // Track per-set occupancy to know which ips are guaranteed resident.
  std::map<uint64_t, uint64_t> last_target;
  std::map<uint64_t, std::vector<uint64_t>> recency;
  for (int i = 0; i < 20000; ++i) {
    uint64_t ip = 4 * (rng() % 64);
    uint64_t set = (ip >> 2) % 8;
    auto& order = recency[set];
    if (rng() % 3 == 0) {
      uint64_t target = 0x1000 + 4 * (rng() % 1000);
      btb.update_btb(ip, target, true, BranchClass::INDIRECT_JUMP);
      last_target[ip] = target;
      order.erase(std::remove(order.begin(), order.end(), ip), order.end());
      order.insert(order.begin(), ip);
      if (order.size() > 2) {
        last_target.erase(order.back());
        order.pop_back();
      }
    } else {
      auto prediction = btb.btb_prediction(ip, BranchClass::INDIRECT_JUMP);
      if (last_target.contains(ip)) {
        CHECK(prediction.target == last_target[ip]);
        order.erase(std::remove(order.begin(), order.end(), ip), order.end());
        order.insert(order.begin(), ip);
      } else {
        CHECK(prediction.target == 0);
      }
    }
  }
}

TEST_CASE("lru victim selection", "[lru]")
{
  StubCache host{1, 4};
  LruReplacement lru;
  lru.bind(host);
  lru.initialize_replacement();
  auto victim = [&] { return lru.find_victim(0, 0, std::span<const CacheBlock>(host.blocks), 0, 0, AccessType::READ); };

  SECTION("invalid way first")
  {
    for (int w : {0, 1, 3})
      host.blocks[static_cast<std::size_t>(w)].valid = true;
    CHECK(victim() == 2);
  }
  SECTION("fill order 0..3, hit on 1, victim 0")
  {
    for (uint64_t w = 0; w < 4; ++w) {
      host.blocks[w].valid = true;
      lru.update_replacement_state(0, 0, w, 0, 0, 0, AccessType::READ, false);
    }
    lru.update_replacement_state(0, 0, 1, 0, 0, 0, AccessType::READ, true);
    CHECK(victim() == 0);
    lru.update_replacement_state(0, 0, 0, 0, 0, 0, AccessType::READ, true);
    CHECK(victim() == 2);
  }
}

TEST_CASE("single-way lru always picks way 0 and never bypasses", "[lru]")
{
  StubCache host{4, 1};
  LruReplacement lru;
  lru.bind(host);
  lru.initialize_replacement();
  std::mt19937_64 rng{2};
  for (int i = 0; i < 100; ++i) {
    auto set = rng() % 4;
    host.blocks[set].valid = true;
    CHECK(lru.find_victim(0, set, std::span<const CacheBlock>(&host.blocks[set], 1), 0, 0, AccessType::READ) == 0);
    lru.update_replacement_state(0, set, 0, 0, 0, 0, AccessType::READ, false);
  }
}

TEST_CASE("registry binds names and rejects unknown or duplicate ones", "[registry]")
{
  auto registry = ModuleRegistry::with_reference_modules();
  CHECK(registry.has_branch_predictor("gshare"));
  CHECK(registry.has_btb("basic_btb"));
  CHECK(registry.has_prefetcher("next_line"));
  CHECK(registry.has_prefetcher("no"));
  CHECK(registry.has_replacement("lru"));
  CHECK(registry.make_branch_predictor("gshare") != nullptr);
  CHECK_THROWS_AS(registry.make_prefetcher("spp"), ConfigError);
  CHECK_THROWS_AS(registry.make_replacement("hawkeye"), ConfigError);
  CHECK_THROWS_AS(registry.add_replacement("lru", [] { return std::make_unique<LruReplacement>(); }), std::invalid_argument);
  // Families are separate namespaces.
  CHECK_NOTHROW(registry.add_btb("lru", [] { return std::make_unique<BasicBtb>(); }));
}

TEST_CASE("unknown module names fail at system construction", "[registry]")
{
  auto config = default_config(1);
  config.find_node("LLC")->replacement = "belady";
  CHECK_THROWS_AS(make_system(config, {synthetic(SyntheticPattern::pure_arithmetic, 10)}), ConfigError);
  config = default_config(1);
  config.cores[0].branch_predictor = "tage";
  CHECK_THROWS_AS(make_system(config, {synthetic(SyntheticPattern::pure_arithmetic, 10)}), ConfigError);
}

TEST_CASE("branch modules see a read-only core view", "[modules]")
{
  StubCore core;
  GsharePredictor p;
  p.bind(core);
  static_assert(std::is_const_v<std::remove_reference_t<decltype(std::declval<const CoreView&>().config())>>);
  static_assert(std::is_const_v<std::remove_reference_t<decltype(std::declval<const CacheView&>().block(0, 0))>>);
  CHECK(core.rob_occupancy() == 0);
}
