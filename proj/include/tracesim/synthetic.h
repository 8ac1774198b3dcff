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

#ifndef TRACESIM_SYNTHETIC_H
#define TRACESIM_SYNTHETIC_H

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "tracesim/trace.h"

namespace tracesim
{
enum class SyntheticPattern { streaming_load, strided_load, random_load, loop_branch, pointer_chase, pure_arithmetic };

std::optional<SyntheticPattern> pattern_from_string(std::string_view name);
std::string_view to_string(SyntheticPattern pattern);

struct SyntheticSpec {
  SyntheticPattern pattern = SyntheticPattern::pure_arithmetic;
  uint64_t length = 0;

  uint64_t stride = 64;
  // Instructions per loop body, including the load or branch the pattern is built around.
  // Zero selects the pattern default.
  uint64_t body_length = 0;
  double taken_rate = 0.99;
  uint64_t start_address = 0x10000000;
  // Loads wrap (streaming/strided) or are drawn (random/pointer-chase) within this many bytes.
  uint64_t address_range = uint64_t{1} << 26;
  uint64_t code_base = 0x400000;
  uint64_t seed = 1;
};

struct SpecError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Streams the records of a synthetic trace one at a time.
class SyntheticGenerator final : public InstructionSource
{
  SyntheticSpec spec_;
  uint64_t body_;
  uint64_t emitted_ = 0;
  std::mt19937_64 rng_;
  double taken_credit_ = 0.5;

  TraceInstruction make(uint64_t index);

public:
  /// Throws SpecError for inconsistent parameters.
  explicit SyntheticGenerator(const SyntheticSpec& spec);

  std::optional<TraceInstruction> next() override;
  void rewind() override;
  std::string name() const override;
};

std::vector<TraceInstruction> generate_synthetic_trace(const SyntheticSpec& spec);
void write_synthetic_trace(const SyntheticSpec& spec, const std::filesystem::path& out);
} // namespace tracesim

#endif
