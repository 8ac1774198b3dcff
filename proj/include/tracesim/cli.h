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

#ifndef TRACESIM_CLI_H
#define TRACESIM_CLI_H

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tracesim
{
struct RunArgs {
  std::string config_path;
  uint64_t warmup_instructions = 0;
  uint64_t simulation_instructions = 0;
  std::vector<std::string> trace_paths;
  std::string json_path;
  std::optional<uint64_t> seed;
};

inline constexpr int exit_ok = 0;
inline constexpr int exit_runtime = 1;
inline constexpr int exit_usage = 2;

/// Runs the command line tool; returns the process exit status.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
} // namespace tracesim

#endif
