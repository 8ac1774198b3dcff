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

#include "tracesim/synthetic.h"

#include <array>
#include <fmt/core.h>

namespace tracesim
{
namespace
{
constexpr std::array<std::pair<std::string_view, SyntheticPattern>, 6> pattern_names{{
    {"streaming-load", SyntheticPattern::streaming_load},
    {"strided-load", SyntheticPattern::strided_load},
    {"random-load", SyntheticPattern::random_load},
    {"loop-branch", SyntheticPattern::loop_branch},
    {"pointer-chase", SyntheticPattern::pointer_chase},
    {"pure-arithmetic", SyntheticPattern::pure_arithmetic},
}};

uint64_t default_body(SyntheticPattern pattern)
{
  switch (pattern) {
  case SyntheticPattern::loop_branch:
    return 8;
  case SyntheticPattern::pure_arithmetic:
    return 16;
  default:
    return 1;
  }
}

bool is_load_pattern(SyntheticPattern pattern) { return pattern != SyntheticPattern::loop_branch && pattern != SyntheticPattern::pure_arithmetic; }

constexpr uint8_t general_reg(uint64_t n) { return static_cast<uint8_t>(1 + n % 5); }
constexpr uint8_t chase_reg = 7;
} // namespace

std::optional<SyntheticPattern> pattern_from_string(std::string_view name)
{
  for (auto [text, pattern] : pattern_names)
    if (text == name)
      return pattern;
  return std::nullopt;
}

std::string_view to_string(SyntheticPattern pattern)
{
  for (auto [text, p] : pattern_names)
    if (p == pattern)
      return text;
  return "unknown";
}

SyntheticGenerator::SyntheticGenerator(const SyntheticSpec& spec)
    : spec_(spec), body_(spec.body_length == 0 ? default_body(spec.pattern) : spec.body_length), rng_(spec.seed)
{
  if (spec_.length == 0)
    throw SpecError("length must be greater than zero");
  if ((spec_.pattern == SyntheticPattern::streaming_load || spec_.pattern == SyntheticPattern::strided_load) && spec_.stride == 0)
    throw SpecError(fmt::format("stride must be nonzero for the {} pattern", to_string(spec_.pattern)));
  if (!(spec_.taken_rate >= 0.0 && spec_.taken_rate <= 1.0))
    throw SpecError("taken rate must lie in [0, 1]");
  if (is_load_pattern(spec_.pattern) && spec_.address_range < 8)
    throw SpecError("address range must be at least 8 bytes");
  if (is_load_pattern(spec_.pattern) && spec_.start_address == 0)
    throw SpecError("start address 0 is reserved for 'no operand'");
}

TraceInstruction SyntheticGenerator::make(uint64_t index)
{
  uint64_t pos = index % body_;
  uint64_t iteration = index / body_;

  TraceInstruction instr;
  instr.ip = spec_.code_base + 4 * pos;

  if (is_load_pattern(spec_.pattern) && pos == 0) {
    uint64_t address = spec_.start_address;
    switch (spec_.pattern) {
    case SyntheticPattern::streaming_load:
    case SyntheticPattern::strided_load:
      address += (iteration * spec_.stride) % spec_.address_range;
      break;
    default:
      address += (rng_() % (spec_.address_range / 8)) * 8;
      break;
    }
    instr.src_mem[0] = address;
    if (spec_.pattern == SyntheticPattern::pointer_chase) {
      instr.src_regs[0] = chase_reg;
      instr.dest_regs[0] = chase_reg;
    } else {
      instr.src_regs[0] = general_reg(pos + 1);
      instr.dest_regs[0] = general_reg(pos);
    }
    return instr;
  }

  if (spec_.pattern == SyntheticPattern::loop_branch && pos == body_ - 1) {
    instr.is_branch = true;
    instr.dest_regs[0] = REG_INSTRUCTION_POINTER;
    instr.src_regs[0] = REG_INSTRUCTION_POINTER;
    instr.src_regs[1] = REG_FLAGS;
    // Error diffusion spreads the not-taken outcomes evenly at the requested rate.
    taken_credit_ += spec_.taken_rate;
    instr.branch_taken = taken_credit_ >= 1.0;
    if (instr.branch_taken)
      taken_credit_ -= 1.0;
    return instr;
  }

  instr.dest_regs[0] = general_reg(pos);
  instr.src_regs[0] = general_reg(pos + 1);
  instr.src_regs[1] = general_reg(pos + 2);
  return instr;
}

std::optional<TraceInstruction> SyntheticGenerator::next()
{
  if (emitted_ >= spec_.length)
    return std::nullopt;
  return make(emitted_++);
}

void SyntheticGenerator::rewind()
{
  emitted_ = 0;
  rng_.seed(spec_.seed);
  taken_credit_ = 0.5;
}

std::string SyntheticGenerator::name() const { return fmt::format("synthetic:{}", to_string(spec_.pattern)); }

std::vector<TraceInstruction> generate_synthetic_trace(const SyntheticSpec& spec)
{
  SyntheticGenerator gen{spec};
  std::vector<TraceInstruction> result;
  result.reserve(spec.length);
  while (auto instr = gen.next())
    result.push_back(*instr);
  return result;
}

void write_synthetic_trace(const SyntheticSpec& spec, const std::filesystem::path& out)
{
  SyntheticGenerator gen{spec};
  TraceWriter writer{out};
  std::vector<uint8_t> buffer;
  buffer.reserve(trace_record_size * 4096);
  while (auto instr = gen.next()) {
    auto bytes = encode_record(*instr);
    buffer.insert(buffer.end(), bytes.begin(), bytes.end());
    if (buffer.size() >= trace_record_size * 4096) {
      writer.write_bytes(buffer);
      buffer.clear();
    }
  }
  writer.write_bytes(buffer);
  writer.close();
}
} // namespace tracesim
