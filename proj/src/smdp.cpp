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

#include "hrm/smdp.hpp"

#include <algorithm>
#include <cmath>

#include "hrm/common.hpp"

namespace hrm {

double discounted_segment(double offset, double duration, double rate, double beta) {
  if (!(beta > 0)) throw DomainError("discount rate must be positive");
  if (duration < 0 || offset < 0) throw DomainError("negative segment time");
  if (duration == 0 || rate == 0) return 0.0;
  return std::exp(-beta * offset) * rate * (-std::expm1(-beta * duration)) / beta;
}

double accumulate_discounted_reward(std::span<const RateSegment> segments, double beta) {
  double offset = 0.0, total = 0.0;
  for (const auto& s : segments) {
    total += discounted_segment(offset, s.duration, s.rate, beta);
    offset += s.duration;
  }
  return total;
}

double smdp_target(double reward, double tau, std::span<const double> next_q, double beta) {
  if (next_q.empty()) throw DomainError("no successor values");
  if (tau < 0) throw DomainError("negative sojourn time");
  const double best = *std::max_element(next_q.begin(), next_q.end());
  const double discount = std::exp(-beta * tau);
  // exp underflows to 0 for long sojourns; avoid 0 * -inf style surprises.
  return discount == 0.0 ? reward : reward + discount * best;
}

double tabular_update(double q, double target, double alpha) {
  return q + alpha * (target - q);
}

DiscountedAccumulator::DiscountedAccumulator(double beta, double time_unit_s)
    : beta_(beta), unit_(time_unit_s) {
  if (!(beta > 0)) throw DomainError("discount rate must be positive");
  if (!(time_unit_s > 0)) throw DomainError("time unit must be positive");
}

void DiscountedAccumulator::start(double epoch_s) {
  epoch_ = epoch_s;
  value_ = 0.0;
  active_ = true;
}

void DiscountedAccumulator::add(double start_s, double duration_s, double rate) {
  if (!active_) return;
  if (start_s < epoch_ - 1e-9 * std::max(1.0, std::abs(epoch_)))
    throw InvariantError("reward segment starts before the decision epoch");
  const double offset = std::max(0.0, start_s - epoch_) / unit_;
  value_ += discounted_segment(offset, duration_s / unit_, rate, beta_);
}

}  // namespace hrm
