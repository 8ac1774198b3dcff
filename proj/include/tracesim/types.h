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

#ifndef TRACESIM_TYPES_H
#define TRACESIM_TYPES_H

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tracesim
{
enum class AccessType : uint8_t { READ, WRITE, PREFETCH, TRANSLATION };
inline constexpr std::array<AccessType, 4> all_access_types{AccessType::READ, AccessType::WRITE, AccessType::PREFETCH, AccessType::TRANSLATION};
inline constexpr std::size_t num_access_types = all_access_types.size();

enum class BranchClass : uint8_t { NOT_BRANCH, DIRECT_JUMP, INDIRECT_JUMP, CONDITIONAL, DIRECT_CALL, INDIRECT_CALL, RETURN };
inline constexpr std::array<BranchClass, 7> all_branch_classes{BranchClass::NOT_BRANCH,  BranchClass::DIRECT_JUMP,   BranchClass::INDIRECT_JUMP,
                                                               BranchClass::CONDITIONAL, BranchClass::DIRECT_CALL,   BranchClass::INDIRECT_CALL,
                                                               BranchClass::RETURN};
inline constexpr std::size_t num_branch_classes = all_branch_classes.size();

std::string_view to_string(AccessType type);
std::string_view to_string(BranchClass cls);
std::optional<AccessType> access_type_from_string(std::string_view name);

constexpr std::size_t index_of(AccessType type) { return static_cast<std::size_t>(type); }
constexpr std::size_t index_of(BranchClass cls) { return static_cast<std::size_t>(cls); }

constexpr bool is_power_of_two(uint64_t x) { return x != 0 && (x & (x - 1)) == 0; }

constexpr unsigned lg2(uint64_t x)
{
  unsigned result = 0;
  while (x >>= 1)
    ++result;
  return result;
}

constexpr uint64_t align_down(uint64_t address, uint64_t granule) { return address - (address % granule); }

// Errors are reported by exception; the CLI maps each kind to an exit status.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModuleContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SimulationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
} // namespace tracesim

#endif
