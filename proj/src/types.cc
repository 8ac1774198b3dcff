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

#include "tracesim/types.h"

#include <algorithm>
#include <cmath>

#include "tracesim/packet.h"

namespace tracesim
{
std::string_view to_string(AccessType type)
{
  switch (type) {
  case AccessType::READ:
    return "READ";
  case AccessType::WRITE:
    return "WRITE";
  case AccessType::PREFETCH:
    return "PREFETCH";
  case AccessType::TRANSLATION:
    return "TRANSLATION";
  }
  return "UNKNOWN";
}

std::string_view to_string(BranchClass cls)
{
  switch (cls) {
  case BranchClass::NOT_BRANCH:
    return "NOT_BRANCH";
  case BranchClass::DIRECT_JUMP:
    return "DIRECT_JUMP";
  case BranchClass::INDIRECT_JUMP:
    return "INDIRECT_JUMP";
  case BranchClass::CONDITIONAL:
    return "CONDITIONAL";
  case BranchClass::DIRECT_CALL:
    return "DIRECT_CALL";
  case BranchClass::INDIRECT_CALL:
    return "INDIRECT_CALL";
  case BranchClass::RETURN:
    return "RETURN";
  }
  return "UNKNOWN";
}

std::optional<AccessType> access_type_from_string(std::string_view name)
{
  for (auto type : all_access_types)
    if (to_string(type) == name)
      return type;
  return std::nullopt;
}

uint64_t period_from_mhz(uint64_t mhz)
{
  if (mhz == 0)
    throw ConfigError("frequency must be positive");
  return std::max<uint64_t>(1, static_cast<uint64_t>(std::llround(1e6 / static_cast<double>(mhz))));
}
} // namespace tracesim
