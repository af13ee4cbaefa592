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

// Reference policies: round-robin allocation and non-learning power
// management (fixed timeout, immediate shutdown, always on).

#ifndef HRM_BASELINES_HPP
#define HRM_BASELINES_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "hrm/episode.hpp"

namespace hrm {

/// Server for the counter-th job (0-based): counter mod M + 1.
int round_robin_next(std::uint64_t counter, int servers);

class RoundRobin : public AllocationPolicy {
 public:
  int choose(Cluster& cluster, const Job& job) override;
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t counter_ = 0;
};

class FixedTimeout : public PowerController {
 public:
  explicit FixedTimeout(double timeout_s);
  std::optional<double> on_idle(const Server&, double) override { return timeout_; }
  double timeout() const { return timeout_; }

 private:
  double timeout_;
};

class AlwaysOn : public PowerController {
 public:
  std::optional<double> on_idle(const Server&, double) override { return std::nullopt; }
};

/// Sleeps the instant a server idles.
std::unique_ptr<PowerController> ad_hoc_shutdown();
std::unique_ptr<PowerController> fixed_timeout_policy(double timeout_s);
std::unique_ptr<PowerController> always_on();

}  // namespace hrm

#endif  // HRM_BASELINES_HPP
