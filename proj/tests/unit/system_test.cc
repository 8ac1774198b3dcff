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

#include <sstream>

#include "test_support.h"

using namespace tracesim;
using namespace tracesim::test;

namespace
{
SimReport run(const SystemConfig& config, std::vector<std::vector<TraceInstruction>> traces, uint64_t warmup, uint64_t simulate)
{
  auto system = make_system(config, std::move(traces));
  return system->run(warmup, simulate);
}

std::vector<TraceInstruction> loop_trace(uint64_t length, double taken_rate = 0.99, uint64_t body = 8)
{
  SyntheticSpec spec;
  spec.pattern = SyntheticPattern::loop_branch;
  spec.length = length;
  spec.taken_rate = taken_rate;
  spec.body_length = body;
  return generate_synthetic_trace(spec);
}
} // namespace

TEST_CASE("pure arithmetic runs close to the machine width", "[core]")
{
  auto report = run(default_config(), {synthetic(SyntheticPattern::pure_arithmetic, 20000)}, 10000, 100000);
  REQUIRE(report.cores[0].instructions == 100000);
  CHECK(report.cores[0].ipc.value >= 3.8);
  CHECK(report.cores[0].ipc.value <= 4.0);
}

TEST_CASE("a one-entry ROB retires at most one instruction per cycle", "[core]")
{
  auto config = default_config();
  config.cores[0].rob_size = 1;
  auto report = run(config, {synthetic(SyntheticPattern::pure_arithmetic, 5000)}, 1000, 20000);
  CHECK(report.cores[0].ipc.value <= 1.0);
  CHECK(report.cores[0].ipc.value > 0.0);
}

TEST_CASE("IPC never exceeds the retire width", "[core][property]")
{
  std::mt19937_64 rng{7};
  for (int trial = 0; trial < 12; ++trial) {
    auto config = default_config();
    auto& core = config.cores[0];
    core.retire_width = 1 + rng() % 4;
    core.fetch_width = 1 + rng() % 6;
    core.decode_width = 1 + rng() % 6;
    core.execute_width = 1 + rng() % 6;
    core.rob_size = 1 + rng() % 64;
    auto pattern = std::array{SyntheticPattern::pure_arithmetic, SyntheticPattern::loop_branch, SyntheticPattern::streaming_load}[trial % 3];
    auto report = run(config, {synthetic(pattern, 4000, trial)}, 500, 5000);
    INFO("trial " << trial << " retire_width " << core.retire_width);
    CHECK(report.cores[0].ipc.value <= static_cast<double>(core.retire_width) + 1e-9);
  }
}

TEST_CASE("identical inputs give byte-identical reports", "[core][system]")
{
  auto config = default_config(2);
  std::vector<std::vector<TraceInstruction>> traces{mixed_trace(8000, 1), synthetic(SyntheticPattern::random_load, 8000, 2)};
  auto registry = ModuleRegistry::with_reference_modules();
  CHECK(run_report(config, registry, traces, 2000, 10000) == run_report(config, registry, traces, 2000, 10000));
}

TEST_CASE("each core counts exactly the requested instructions", "[core][system]")
{
  auto config = default_config(2);
  config.cores[1].rob_size = 8;
  auto report = run(config, {mixed_trace(6000, 5), synthetic(SyntheticPattern::pure_arithmetic, 6000)}, 3000, 7777);
  REQUIRE(report.cores.size() == 2);
  for (const auto& core : report.cores)
    CHECK(core.instructions == 7777);
  // The slow core's measurement window is longer.
  CHECK(report.cores[0].cycles != report.cores[1].cycles);
}

TEST_CASE("a short trace is replayed until the target is reached", "[core]")
{
  std::vector<TraceInstruction> tiny{arith(0x400000), load(0x400004, 0x1000), conditional(0x400008, true)};
  auto report = run(default_config(), {tiny}, 100, 10000);
  CHECK(report.cores[0].instructions == 10000);
  CHECK(report.cores[0].branch_predictions >= 3332);
}

TEST_CASE("an empty trace is rejected", "[core]")
{
  auto system = make_system(default_config(), {std::vector<TraceInstruction>{}});
  CHECK_THROWS_AS(system->run(0, 10), TraceError);
}

TEST_CASE("occupancy never exceeds the structure sizes", "[core][property]")
{
  std::mt19937_64 rng{3};
  for (int trial = 0; trial < 10; ++trial) {
    auto config = default_config();
    auto& core = config.cores[0];
    core.rob_size = 1 + rng() % 48;
    core.lq_size = 1 + rng() % 16;
    core.sq_size = 1 + rng() % 16;
    auto system = make_system(config, {mixed_trace(6000, trial)});
    system->run(0, 6000);
    auto& c = system->core(0);
    INFO("trial " << trial);
    CHECK(c.max_rob_occupancy() <= core.rob_size);
    CHECK(c.max_lq_occupancy() <= core.lq_size);
    CHECK(c.max_sq_occupancy() <= core.sq_size);
    CHECK(c.max_rob_occupancy() >= 1);
  }
}

TEST_CASE("every misprediction costs at least the penalty", "[core]")
{
  auto trace = mixed_trace(20000, 9);
  for (uint64_t penalty : {0u, 20u, 60u}) {
    auto config = default_config();
    config.cores[0].mispredict_penalty = penalty;
    auto report = run(config, {trace}, 0, 20000);
    const auto& core = report.cores[0];
    INFO("penalty " << penalty);
    REQUIRE(core.branch_mispredictions > 100);
    CHECK(core.cycles + penalty >= core.branch_mispredictions * penalty);
  }
}

TEST_CASE("a larger penalty never speeds the core up", "[core]")
{
  auto trace = mixed_trace(20000, 10);
  uint64_t previous = 0;
  for (uint64_t penalty : {0u, 10u, 30u, 90u}) {
    auto config = default_config();
    config.cores[0].mispredict_penalty = penalty;
    auto cycles = run(config, {trace}, 0, 20000).cores[0].cycles;
    CHECK(cycles >= previous);
    previous = cycles;
  }
}

TEST_CASE("branches are counted by class", "[core][branch]")
{
  auto report = run(default_config(), {loop_trace(8000)}, 0, 80000);
  const auto& core = report.cores[0];
  auto conditional_index = index_of(BranchClass::CONDITIONAL);
  CHECK(core.branch_predictions == 10000);
  CHECK(core.predictions_by_class[conditional_index] == 10000);
  uint64_t sum = 0;
  uint64_t mis = 0;
  for (auto cls : all_branch_classes) {
    sum += core.predictions_by_class[index_of(cls)];
    mis += core.mispredictions_by_class[index_of(cls)];
  }
  CHECK(sum == core.branch_predictions);
  CHECK(mis == core.branch_mispredictions);
  CHECK(core.branch_accuracy.value >= 0.97);
  CHECK(core.branch_mpki.value == Catch::Approx(1000.0 * core.branch_mispredictions / core.instructions));
}

TEST_CASE("taken jumps that miss the BTB are mispredicted once", "[core][branch]")
{
  std::vector<TraceInstruction> trace;
  for (uint64_t i = 0; i < 16; ++i) {
    trace.push_back(arith(0x400000 + i * 8));
    trace.push_back(jump(0x400004 + i * 8));
  }
  auto report = run(default_config(), {trace}, 0, 32 * 10);
  CHECK(report.cores[0].predictions_by_class[index_of(BranchClass::DIRECT_JUMP)] == 160);
  CHECK(report.cores[0].branch_mispredictions == 16);
}

TEST_CASE("resetting counters leaves cache contents alone", "[system]")
{
  auto system = make_system(default_config(), {synthetic(SyntheticPattern::random_load, 5000)});
  system->initialize();
  for (int i = 0; i < 20000; ++i)
    system->step();
  std::vector<uint64_t> before;
  for (auto* node : system->nodes())
    before.push_back(node->content_digest());
  system->reset_for_measurement();
  std::vector<uint64_t> after;
  for (auto* node : system->nodes())
    after.push_back(node->content_digest());
  CHECK(before == after);
  CHECK(system->node("cpu0_L1D").counters().total_misses() == 0);
  CHECK(system->core(0).counters().instructions == 0);
  CHECK(system->core(0).retired_total() > 0);
}

TEST_CASE("hook multiplicities match the counters", "[system][modules]")
{
  auto violations = hook_multiplicity_violations(60000);
  for (const auto& v : violations)
    UNSCOPED_INFO(v);
  CHECK(violations.empty());
}

TEST_CASE("final-stats hooks fire once", "[system][modules]")
{
  auto zero = final_stats_violations(0, 0);
  for (const auto& v : zero)
    UNSCOPED_INFO(v);
  CHECK(zero.empty());
  auto normal = final_stats_violations(1000, 4000);
  for (const auto& v : normal)
    UNSCOPED_INFO(v);
  CHECK(normal.empty());
}

TEST_CASE("a zero-instruction run reports zero and undefined ratios", "[system]")
{
  auto report = run(default_config(), {synthetic(SyntheticPattern::pure_arithmetic, 100)}, 0, 0);
  CHECK(report.cores[0].instructions == 0);
  CHECK_FALSE(report.cores[0].ipc.defined);
  auto json = report.to_json();
  CHECK(json["cpu0.ipc"] == 0.0);
  CHECK(json["cpu0.ipc_defined"] == false);
}

TEST_CASE("a system runs only once", "[system]")
{
  auto system = make_system(default_config(), {synthetic(SyntheticPattern::pure_arithmetic, 100)});
  system->run(0, 10);
  CHECK_THROWS_AS(system->run(0, 10), std::logic_error);
}

TEST_CASE("the watchdog stops a machine that cannot retire", "[system]")
{
  auto system = make_system(default_config(), {synthetic(SyntheticPattern::random_load, 1000)});
  system->set_watchdog_cycles(5);
  CHECK_THROWS_AS(system->run(0, 1000), SimulationError);
}

TEST_CASE("warmup traffic is not counted", "[system]")
{
  auto trace = synthetic(SyntheticPattern::streaming_load, 4000);
  auto cold = run(default_config(), {trace}, 0, 4000);
  auto warm = run(default_config(), {trace}, 4000, 4000);
  auto misses = [](const SimReport& r) {
    for (const auto& node : r.nodes)
      if (node.name == "cpu0_L1D")
        return node.counters.misses[index_of(AccessType::READ)];
    return uint64_t{0};
  };
  CHECK(misses(cold) > 0);
  CHECK(misses(warm) <= misses(cold));
}

TEST_CASE("two cores on one LLC both make progress", "[system]")
{
  auto report = run(default_config(2), {synthetic(SyntheticPattern::random_load, 3000, 1), synthetic(SyntheticPattern::random_load, 3000, 2)}, 0,
                    3000);
  CHECK(report.cores[0].instructions == 3000);
  CHECK(report.cores[1].instructions == 3000);
  for (const auto& node : report.nodes)
    if (node.name == "LLC")
      CHECK(node.instructions == 6000);
}
