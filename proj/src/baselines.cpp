/*
 * Copyright 2026 The hrm Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "hrm/baselines.hpp"

#include <cmath>

namespace hrm {

int round_robin_next(std::uint64_t counter, int servers) {
  if (servers < 1) throw DomainError("round robin needs at least one server");
  return static_cast<int>(counter % static_cast<std::uint64_t>(servers)) + 1;
}

int RoundRobin::choose(Cluster& cluster, const Job&) {
  return round_robin_next(counter_++, cluster.size());
}

FixedTimeout::FixedTimeout(double timeout_s) : timeout_(timeout_s) {
  if (!(timeout_s >= 0) || !std::isfinite(timeout_s))
    throw ConfigError("timeout must be finite and >= 0");
}

std::unique_ptr<PowerController> ad_hoc_shutdown() { return std::make_unique<FixedTimeout>(0.0); }

std::unique_ptr<PowerController> fixed_timeout_policy(double timeout_s) {
  return std::make_unique<FixedTimeout>(timeout_s);
}

std::unique_ptr<PowerController> always_on() { return std::make_unique<AlwaysOn>(); }

}  // namespace hrm
