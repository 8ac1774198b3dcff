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

#include "tracesim/modules.h"

#include <fmt/core.h>
#include <stdexcept>

#include "tracesim/reference_modules.h"

namespace tracesim
{
namespace
{
template <typename Map, typename Factory>
void add_unique(Map& map, std::string name, Factory factory, std::string_view family)
{
  if (map.contains(name))
    throw std::invalid_argument(fmt::format("{} '{}' is already registered", family, name));
  map.emplace(std::move(name), std::move(factory));
}

template <typename Map>
auto make_from(const Map& map, std::string_view name, std::string_view family)
{
  auto it = map.find(name);
  if (it == map.end())
    throw ConfigError(fmt::format("unknown {} '{}'", family, name));
  return it->second();
}
} // namespace

ModuleRegistry ModuleRegistry::with_reference_modules()
{
  ModuleRegistry registry;
  registry.add_branch_predictor("gshare", [] { return std::make_unique<GsharePredictor>(); });
  registry.add_btb("basic_btb", [] { return std::make_unique<BasicBtb>(); });
  registry.add_prefetcher("next_line", [] { return std::make_unique<NextLinePrefetcher>(); });
  registry.add_prefetcher("no", [] { return std::make_unique<NoPrefetcher>(); });
  registry.add_replacement("lru", [] { return std::make_unique<LruReplacement>(); });
  return registry;
}

void ModuleRegistry::add_branch_predictor(std::string name, BranchPredictorFactory factory)
{
  add_unique(branch_predictors_, std::move(name), std::move(factory), "branch predictor");
}

void ModuleRegistry::add_btb(std::string name, BtbFactory factory) { add_unique(btbs_, std::move(name), std::move(factory), "branch target predictor"); }

void ModuleRegistry::add_prefetcher(std::string name, PrefetcherFactory factory)
{
  add_unique(prefetchers_, std::move(name), std::move(factory), "prefetcher");
}

void ModuleRegistry::add_replacement(std::string name, ReplacementFactory factory)
{
  add_unique(replacements_, std::move(name), std::move(factory), "replacement policy");
}

std::unique_ptr<BranchPredictor> ModuleRegistry::make_branch_predictor(std::string_view name) const
{
  return make_from(branch_predictors_, name, "branch predictor");
}

std::unique_ptr<BranchTargetPredictor> ModuleRegistry::make_btb(std::string_view name) const { return make_from(btbs_, name, "branch target predictor"); }

std::unique_ptr<Prefetcher> ModuleRegistry::make_prefetcher(std::string_view name) const { return make_from(prefetchers_, name, "prefetcher"); }

std::unique_ptr<ReplacementPolicy> ModuleRegistry::make_replacement(std::string_view name) const
{
  return make_from(replacements_, name, "replacement policy");
}
} // namespace tracesim
