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

#include "tracesim/cli.h"

#include <CLI11.hpp>
#include <chrono>
#include <fmt/format.h>
#include <fstream>
#include <ostream>
#include <sstream>

#include "tracesim/config.h"
#include "tracesim/reference_modules.h"
#include "tracesim/synthetic.h"
#include "tracesim/system.h"

namespace tracesim
{
namespace
{
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int simulate(const RunArgs& args, std::ostream& out, std::ostream& err)
{
  auto config = load_config(args.config_path, &err);
  if (args.seed)
    config.vm_seed = *args.seed;
  if (args.trace_paths.size() != config.num_cores)
    throw UsageError(fmt::format("{} cores are configured but {} trace file{} given", config.num_cores, args.trace_paths.size(),
                                 args.trace_paths.size() == 1 ? " was" : "s were"));

  std::vector<std::unique_ptr<InstructionSource>> traces;
  for (const auto& path : args.trace_paths)
    traces.push_back(std::make_unique<TraceReader>(path));

  auto registry = ModuleRegistry::with_reference_modules();
  System system{config, registry, std::move(traces)};

  auto start = std::chrono::steady_clock::now();
  std::ostringstream module_stats;
  auto report = system.run(args.warmup_instructions, args.simulation_instructions, &module_stats);
  std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

  report.print_text(out);
  if (!module_stats.str().empty())
    out << '\n' << module_stats.str();

  uint64_t total = 0;
  for (std::size_t cpu = 0; cpu < system.num_cores(); ++cpu)
    total += system.core(cpu).retired_total();
  if (elapsed.count() > 0)
    err << fmt::format("simulated {} instructions in {:.3f} s ({:.0f} instructions/s)\n", total, elapsed.count(),
                       static_cast<double>(total) / elapsed.count());

  if (!args.json_path.empty()) {
    std::ofstream json{args.json_path};
    if (!json)
      throw std::runtime_error(fmt::format("cannot write {}", args.json_path));
    json << report.to_json().dump(2) << '\n';
  }
  return exit_ok;
}
} // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Trace-driven multicore simulator", "tracesim"};
  app.set_version_flag("--version", "tracesim 1.0");

  RunArgs args;
  auto config_opt = app.add_option("--config", args.config_path, "JSON machine configuration")->check(CLI::ExistingFile);
  auto warmup_opt = app.add_option("--warmup", args.warmup_instructions, "Warmup instructions per core");
  auto simulate_opt = app.add_option("--simulate", args.simulation_instructions, "Measured instructions per core");
  app.add_option("--json", args.json_path, "Write a flat JSON report here");
  app.add_option("--seed", args.seed, "Override the configured vm_seed");
  app.add_option("traces", args.trace_paths, "One trace per core, in core order");

  auto gen = app.add_subcommand("tracegen", "Write a synthetic trace");
  SyntheticSpec spec;
  std::string pattern_name;
  std::string gen_out;
  gen->add_option("--pattern", pattern_name, "streaming-load, strided-load, random-load, loop-branch, pointer-chase or pure-arithmetic")->required();
  gen->add_option("--length", spec.length, "Number of records")->required();
  gen->add_option("--seed", spec.seed, "Generator seed");
  gen->add_option("--stride", spec.stride, "Bytes between consecutive loads");
  gen->add_option("--body", spec.body_length, "Instructions per loop body");
  gen->add_option("--taken-rate", spec.taken_rate, "Loop branch taken rate");
  gen->add_option("--start", spec.start_address, "First load address");
  gen->add_option("--range", spec.address_range, "Address range in bytes");
  gen->add_option("--out", gen_out, "Output path; .gz and .xz compress")->required();

  std::vector<std::string> reversed(raw_args.rbegin(), raw_args.rend());
  try {
    app.parse(reversed);
    if (!gen->parsed()) {
      std::vector<std::string> missing;
      for (auto [opt, name] : {std::pair{config_opt, "--config"}, {warmup_opt, "--warmup"}, {simulate_opt, "--simulate"}})
        if (opt->count() == 0)
          missing.emplace_back(name);
      if (!missing.empty())
        throw CLI::RequiredError(fmt::format("{} is required", fmt::join(missing, ", ")));
      if (args.trace_paths.empty())
        throw CLI::RequiredError("at least one trace file is required");
    }
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (gen->parsed()) {
      auto pattern = pattern_from_string(pattern_name);
      if (!pattern)
        throw SpecError(fmt::format("unknown pattern '{}'", pattern_name));
      spec.pattern = *pattern;
      write_synthetic_trace(spec, gen_out);
      return exit_ok;
    }
    return simulate(args, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return exit_usage;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return exit_usage;
  } catch (const SpecError& e) {
    err << "tracegen error: " << e.what() << '\n';
    return exit_usage;
  } catch (const TraceError& e) {
    err << "trace error: " << e.what() << '\n';
    return exit_runtime;
  } catch (const ModuleContractError& e) {
    err << "module error: " << e.what() << '\n';
    return exit_runtime;
  } catch (const SimulationError& e) {
    err << "simulation error: " << e.what() << '\n';
    return exit_runtime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_runtime;
  }
}
} // namespace tracesim
