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

#ifndef TRACESIM_CORE_H
#define TRACESIM_CORE_H

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <vector>

#include "tracesim/cache.h"
#include "tracesim/config.h"
#include "tracesim/modules.h"
#include "tracesim/packet.h"
#include "tracesim/stats.h"
#include "tracesim/trace.h"

namespace tracesim
{
struct CorePorts {
  MemoryPort* itlb = nullptr;
  MemoryPort* dtlb = nullptr;
  MemoryPort* l1i = nullptr;
  MemoryPort* l1d = nullptr;
  // Receives prefetcher_branch_operate; may be null.
  CacheNode* l1i_node = nullptr;
};

/*
 * One trace-driven core. The front end reads the trace, predicts branches and
 * fetches instruction blocks through the ITLB and L1I. The back end dispatches
 * into the ROB/LQ/SQ, issues in program order without register dependencies,
 * and retires in order.
 */
class Core final : public Operable, public ResponseSink, public CoreView
{
public:
  Core(uint32_t cpu, const CoreConfig& config, uint64_t page_size, uint64_t block_size, InstructionSource& trace, StatsGate& gate,
       std::unique_ptr<BranchPredictor> predictor, std::unique_ptr<BranchTargetPredictor> btb, CorePorts ports);

  void initialize_modules();
  void final_stats(std::ostream& out);

  /// Starts counting toward `instructions` retirements; a zero target freezes the core at once.
  void begin_measurement(uint64_t instructions);

  void operate() override;
  void return_data(const MemoryPacket& packet) override;

  // CoreView
  uint32_t cpu() const override { return cpu_; }
  const CoreConfig& config() const override { return config_; }
  uint64_t current_cycle() const override { return current_cycle_; }
  std::size_t rob_occupancy() const override { return rob_.size(); }

  std::size_t lq_occupancy() const { return lq_used_; }
  std::size_t sq_occupancy() const { return sq_used_; }
  std::size_t max_rob_occupancy() const { return max_rob_; }
  std::size_t max_lq_occupancy() const { return max_lq_; }
  std::size_t max_sq_occupancy() const { return max_sq_; }

  uint64_t retired_total() const { return retired_total_; }
  /// Branches predicted at trace-read time and not yet trained.
  uint64_t untrained_branches() const { return untrained_branches_; }
  const CoreCounters& counters() const { return counters_; }
  void reset_counters() { counters_ = CoreCounters{}; }

private:
  enum class OperandState : uint8_t { idle, translating, translated, reading, done };

  struct MemOperand {
    uint64_t vaddr = 0;
    uint64_t paddr = 0;
    bool is_load = false;
    bool written = false;
    OperandState state = OperandState::idle;
  };

  struct FetchedInstruction {
    uint64_t id = 0;
    uint64_t ip = 0;
    BranchClass branch_class = BranchClass::NOT_BRANCH;
    bool taken = false;
    uint64_t target = 0;
    bool mispredicted = false;
    uint64_t block_seq = 0;
    uint8_t num_loads = 0;
    uint8_t num_stores = 0;
    std::array<uint64_t, num_src_mem + num_dest_mem> addresses{};
  };

  struct RobEntry {
    FetchedInstruction instr;
    uint64_t dispatch_cycle = 0;
    bool issued = false;
    bool trained = false;
    bool completed = false;
    uint64_t complete_cycle = 0;
    uint8_t operands_issued = 0;
    uint8_t operands_pending = 0;
    std::array<MemOperand, num_src_mem + num_dest_mem> operands{};
    uint8_t num_operands = 0;
  };

  enum class BlockState : uint8_t { idle, translating, translated, reading, ready };

  struct BlockFetch {
    uint64_t seq = 0;
    uint64_t vblock = 0;
    uint64_t pblock = 0;
    uint64_t ip = 0;
    BlockState state = BlockState::idle;
  };

  static constexpr uint64_t block_token_flag = uint64_t{1} << 63;

  uint32_t cpu_;
  CoreConfig config_;
  uint64_t page_size_;
  uint64_t block_size_;
  InstructionSource& trace_;
  StatsGate& gate_;
  std::unique_ptr<BranchPredictor> predictor_;
  std::unique_ptr<BranchTargetPredictor> btb_;
  CorePorts ports_;

  std::optional<TraceInstruction> lookahead_;
  uint64_t next_id_ = 0;
  std::deque<FetchedInstruction> fetch_buffer_;
  std::deque<BlockFetch> blocks_;
  uint64_t next_block_seq_ = 0;
  bool waiting_on_branch_ = false;
  uint64_t fetch_stall_until_ = 0;

  std::deque<RobEntry> rob_;
  std::size_t issue_cursor_ = 0;
  std::size_t lq_used_ = 0;
  std::size_t sq_used_ = 0;
  std::size_t max_rob_ = 0;
  std::size_t max_lq_ = 0;
  std::size_t max_sq_ = 0;
  std::vector<std::pair<uint64_t, uint8_t>> pending_reads_;

  ResponseInbox inbox_;
  CoreCounters counters_;
  uint64_t retired_total_ = 0;
  uint64_t untrained_branches_ = 0;
  uint64_t measurement_target_ = 0;
  bool measuring_ = false;

  TraceInstruction read_record();
  void handle_response(const MemoryPacket& packet);
  RobEntry* find_rob(uint64_t id);
  void maybe_complete(RobEntry& entry);

  void retire();
  void execute();
  bool issue_operands(RobEntry& entry);
  void issue_pending_reads();
  void dispatch();
  void fetch();
  void read_trace();
  void issue_block_fetches();

  MemoryPacket make_packet(uint64_t address, AccessType type, uint64_t ip, uint64_t instr_id, uint64_t token);
  std::size_t load_slots(const FetchedInstruction& instr) const;
  std::size_t store_slots(const FetchedInstruction& instr) const;
};
} // namespace tracesim

#endif
