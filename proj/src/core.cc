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

#include "tracesim/core.h"

#include <algorithm>
#include <fmt/core.h>

namespace tracesim
{
Core::Core(uint32_t cpu, const CoreConfig& config, uint64_t page_size, uint64_t block_size, InstructionSource& trace, StatsGate& gate,
           std::unique_ptr<BranchPredictor> predictor, std::unique_ptr<BranchTargetPredictor> btb, CorePorts ports)
    : Operable(period_from_mhz(config.frequency)), cpu_(cpu), config_(config), page_size_(page_size), block_size_(block_size), trace_(trace),
      gate_(gate), predictor_(std::move(predictor)), btb_(std::move(btb)), ports_(ports)
{
  if (!predictor_ || !btb_)
    throw ConfigError(fmt::format("cpu {} needs a branch predictor and a branch target predictor", cpu));
  if (!ports_.itlb || !ports_.dtlb || !ports_.l1i || !ports_.l1d)
    throw ConfigError(fmt::format("cpu {} is missing a memory port", cpu));
  predictor_->bind(*this);
  btb_->bind(*this);
}

void Core::initialize_modules()
{
  predictor_->initialize_branch_predictor();
  btb_->initialize_btb();
}

void Core::final_stats(std::ostream& out)
{
  predictor_->branch_predictor_final_stats(out);
  btb_->btb_final_stats(out);
}

void Core::begin_measurement(uint64_t instructions)
{
  measuring_ = true;
  measurement_target_ = instructions;
  if (instructions == 0)
    gate_.freeze(cpu_);
}

void Core::return_data(const MemoryPacket& packet) { inbox_.push(packet); }

void Core::operate()
{
  if (gate_.counting(cpu_))
    ++counters_.cycles;

  while (inbox_.has_ready(now()))
    handle_response(inbox_.pop());

  retire();
  execute();
  dispatch();
  fetch();
}

TraceInstruction Core::read_record()
{
  auto pull = [this] {
    auto record = trace_.next();
    if (!record) {
      trace_.rewind();
      record = trace_.next();
      if (!record)
        throw TraceError(fmt::format("trace '{}' contains no instructions", trace_.name()));
    }
    return *record;
  };

  if (!lookahead_)
    lookahead_ = pull();
  auto current = *lookahead_;
  lookahead_ = pull();
  return current;
}

MemoryPacket Core::make_packet(uint64_t address, AccessType type, uint64_t ip, uint64_t instr_id, uint64_t token)
{
  MemoryPacket packet;
  packet.address = address;
  packet.v_address = address;
  packet.ip = ip;
  packet.instr_id = instr_id;
  packet.cpu = cpu_;
  packet.type = type;
  packet.enqueue_time = now();
  packet.ready_time = now();
  packet.requester = this;
  packet.token = token;
  return packet;
}

Core::RobEntry* Core::find_rob(uint64_t id)
{
  if (rob_.empty() || id < rob_.front().instr.id)
    return nullptr;
  auto index = id - rob_.front().instr.id;
  return index < rob_.size() ? &rob_[index] : nullptr;
}

void Core::handle_response(const MemoryPacket& packet)
{
  if (packet.token & block_token_flag) {
    auto seq = packet.token & ~block_token_flag;
    auto it = std::find_if(blocks_.begin(), blocks_.end(), [seq](const BlockFetch& b) { return b.seq == seq; });
    if (it == blocks_.end())
      return;
    if (it->state == BlockState::translating) {
      it->pblock = packet.data * page_size_ + it->vblock % page_size_;
      it->state = BlockState::translated;
    } else if (it->state == BlockState::reading) {
      it->state = BlockState::ready;
    }
    return;
  }

  auto id = packet.token >> 3;
  auto index = packet.token & 7;
  auto* entry = find_rob(id);
  if (entry == nullptr)
    throw SimulationError(fmt::format("cpu {}: response for instruction {} which is not in flight", cpu_, id));
  auto& op = entry->operands[index];
  if (op.state == OperandState::translating) {
    op.paddr = packet.data * page_size_ + op.vaddr % page_size_;
    if (op.is_load) {
      op.state = OperandState::translated;
      pending_reads_.emplace_back(id, static_cast<uint8_t>(index));
      return;
    }
  } else if (op.state != OperandState::reading) {
    return;
  }
  op.state = OperandState::done;
  --entry->operands_pending;
  maybe_complete(*entry);
}

void Core::maybe_complete(RobEntry& entry)
{
  if (entry.issued && !entry.completed && entry.operands_pending == 0) {
    entry.completed = true;
    entry.complete_cycle = current_cycle_;
  }
}

void Core::retire()
{
  for (uint64_t n = 0; n < config_.retire_width && !rob_.empty(); ++n) {
    auto& head = rob_.front();
    if (!head.completed || head.complete_cycle > current_cycle_)
      return;

    for (std::size_t i = 0; i < head.num_operands; ++i) {
      auto& op = head.operands[i];
      if (op.is_load || op.written)
        continue;
      auto write = make_packet(op.paddr, AccessType::WRITE, head.instr.ip, head.instr.id, 0);
      write.v_address = op.vaddr;
      write.requester = nullptr;
      if (!ports_.l1d->add_wq(write))
        return;
      op.written = true;
    }

    if (head.instr.id != retired_total_)
      throw SimulationError(fmt::format("cpu {}: retired instruction {} out of order (expected {})", cpu_, head.instr.id, retired_total_));
    ++retired_total_;
    lq_used_ -= load_slots(head.instr);
    sq_used_ -= store_slots(head.instr);
    if (gate_.counting(cpu_)) {
      ++counters_.instructions;
      if (measuring_ && counters_.instructions >= measurement_target_)
        gate_.freeze(cpu_);
    }
    rob_.pop_front();
    --issue_cursor_;
  }
}

void Core::issue_pending_reads()
{
  std::size_t done = 0;
  for (; done < pending_reads_.size(); ++done) {
    auto [id, index] = pending_reads_[done];
    auto* entry = find_rob(id);
    auto& op = entry->operands[index];
    auto read = make_packet(op.paddr, AccessType::READ, entry->instr.ip, id, (id << 3) | index);
    read.v_address = op.vaddr;
    if (!ports_.l1d->add_rq(read))
      break;
    op.state = OperandState::reading;
  }
  pending_reads_.erase(pending_reads_.begin(), pending_reads_.begin() + static_cast<std::ptrdiff_t>(done));
}

bool Core::issue_operands(RobEntry& entry)
{
  while (entry.operands_issued < entry.num_operands) {
    auto index = entry.operands_issued;
    auto& op = entry.operands[index];
    auto translation = make_packet(op.vaddr, AccessType::TRANSLATION, entry.instr.ip, entry.instr.id, (entry.instr.id << 3) | index);
    if (!ports_.dtlb->add_rq(translation))
      return false;
    op.state = OperandState::translating;
    ++entry.operands_issued;
  }
  return true;
}

void Core::execute()
{
  issue_pending_reads();

  for (uint64_t issued = 0; issued < config_.execute_width && issue_cursor_ < rob_.size(); ++issued) {
    auto& entry = rob_[issue_cursor_];
    if (entry.dispatch_cycle >= current_cycle_)
      return;

    const auto& instr = entry.instr;
    if (instr.branch_class != BranchClass::NOT_BRANCH && !entry.trained) {
      entry.trained = true;
      predictor_->last_branch_result(instr.ip, instr.target, instr.taken, instr.branch_class);
      btb_->update_btb(instr.ip, instr.target, instr.taken, instr.branch_class);
      --untrained_branches_;
      if (gate_.counting(cpu_)) {
        ++counters_.branches[index_of(instr.branch_class)];
        if (instr.mispredicted)
          ++counters_.mispredictions[index_of(instr.branch_class)];
      }
      if (instr.mispredicted) {
        waiting_on_branch_ = false;
        fetch_stall_until_ = current_cycle_ + config_.mispredict_penalty;
      }
    }

    if (!issue_operands(entry))
      return;

    entry.issued = true;
    ++issue_cursor_;
    if (entry.num_operands == 0) {
      entry.completed = true;
      entry.complete_cycle = current_cycle_ + config_.arithmetic_latency;
    } else {
      maybe_complete(entry);
    }
  }
}

std::size_t Core::load_slots(const FetchedInstruction& instr) const { return std::min<std::size_t>(instr.num_loads, config_.lq_size); }
std::size_t Core::store_slots(const FetchedInstruction& instr) const { return std::min<std::size_t>(instr.num_stores, config_.sq_size); }

void Core::dispatch()
{
  for (uint64_t n = 0; n < config_.decode_width && !fetch_buffer_.empty(); ++n) {
    const auto& instr = fetch_buffer_.front();
    auto block = std::find_if(blocks_.begin(), blocks_.end(), [&instr](const BlockFetch& b) { return b.seq == instr.block_seq; });
    if (block == blocks_.end() || block->state != BlockState::ready)
      break;
    if (rob_.size() >= config_.rob_size)
      break;
    auto loads = load_slots(instr);
    auto stores = store_slots(instr);
    if (lq_used_ + loads > config_.lq_size || sq_used_ + stores > config_.sq_size)
      break;

    RobEntry entry;
    entry.instr = instr;
    entry.dispatch_cycle = current_cycle_;
    for (std::size_t i = 0; i < static_cast<std::size_t>(instr.num_loads + instr.num_stores); ++i) {
      entry.operands[i].vaddr = instr.addresses[i];
      entry.operands[i].is_load = i < instr.num_loads;
    }
    entry.num_operands = static_cast<uint8_t>(instr.num_loads + instr.num_stores);
    entry.operands_pending = entry.num_operands;
    rob_.push_back(entry);
    lq_used_ += loads;
    sq_used_ += stores;
    max_rob_ = std::max(max_rob_, rob_.size());
    max_lq_ = std::max(max_lq_, lq_used_);
    max_sq_ = std::max(max_sq_, sq_used_);
    fetch_buffer_.pop_front();
  }

  while (blocks_.size() > 1 && (fetch_buffer_.empty() || blocks_.front().seq < fetch_buffer_.front().block_seq))
    blocks_.pop_front();
}

void Core::fetch()
{
  read_trace();
  issue_block_fetches();
}

void Core::read_trace()
{
  if (waiting_on_branch_ || current_cycle_ < fetch_stall_until_)
    return;

  for (uint64_t n = 0; n < config_.fetch_width && fetch_buffer_.size() < config_.fetch_buffer_size; ++n) {
    auto record = read_record();

    FetchedInstruction instr;
    instr.id = next_id_++;
    instr.ip = record.ip;
    instr.branch_class = classify_branch(record);
    for (auto address : record.src_mem)
      if (address != 0)
        instr.addresses[instr.num_loads++] = address;
    for (auto address : record.dest_mem)
      if (address != 0)
        instr.addresses[instr.num_loads + instr.num_stores++] = address;

    auto vblock = align_down(record.ip, block_size_);
    if (blocks_.empty() || blocks_.back().vblock != vblock)
      blocks_.push_back(BlockFetch{next_block_seq_++, vblock, 0, record.ip, BlockState::idle});
    instr.block_seq = blocks_.back().seq;

    if (instr.branch_class != BranchClass::NOT_BRANCH) {
      instr.taken = record.branch_taken;
      instr.target = instr.taken ? lookahead_->ip : 0;

      auto btb = btb_->btb_prediction(instr.ip, instr.branch_class);
      bool direction = predictor_->predict_branch(instr.ip, btb.target, btb.always_taken, instr.branch_class);
      bool predicted_taken = instr.branch_class == BranchClass::CONDITIONAL ? (direction && btb.target != 0) : true;
      uint64_t predicted_target = predicted_taken ? btb.target : 0;
      instr.mispredicted = predicted_taken != instr.taken || (instr.taken && predicted_target != instr.target);
      if (ports_.l1i_node != nullptr)
        ports_.l1i_node->branch_operate(cpu_, instr.ip, instr.branch_class, predicted_target);
      ++untrained_branches_;
    }

    fetch_buffer_.push_back(instr);
    if (instr.mispredicted) {
      waiting_on_branch_ = true;
      return;
    }
  }
}

void Core::issue_block_fetches()
{
  for (auto& block : blocks_) {
    if (block.state == BlockState::idle) {
      auto translation = make_packet(block.vblock, AccessType::TRANSLATION, block.ip, 0, block_token_flag | block.seq);
      if (!ports_.itlb->add_rq(translation))
        return;
      block.state = BlockState::translating;
    } else if (block.state == BlockState::translated) {
      auto read = make_packet(block.pblock, AccessType::READ, block.ip, 0, block_token_flag | block.seq);
      read.v_address = block.vblock;
      if (!ports_.l1i->add_rq(read))
        return;
      block.state = BlockState::reading;
    }
  }
}
} // namespace tracesim
