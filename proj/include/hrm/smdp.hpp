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

// Continuous-time Q-learning arithmetic shared by the allocator and the
// per-server power managers.
//
// Over a sojourn of length tau starting at a decision epoch, with a reward
// rate r(t) that is constant on consecutive segments (duration d_i, rate r_i,
// offset T_i from the epoch), the discounted reward is
//
//   R = sum_i exp(-beta T_i) * r_i * (1 - exp(-beta d_i)) / beta
//
// and the value target is R + exp(-beta tau) * max_a' Q(s', a').

#ifndef HRM_SMDP_HPP
#define HRM_SMDP_HPP

#include <span>

namespace hrm {

struct RateSegment {
  double duration = 0.0;
  double rate = 0.0;
};

/// exp(-beta offset) * rate * (1 - exp(-beta duration)) / beta.
double discounted_segment(double offset, double duration, double rate, double beta);

/// Segments are consecutive, starting at the epoch.
double accumulate_discounted_reward(std::span<const RateSegment> segments, double beta);

double smdp_target(double reward, double tau, std::span<const double> next_q, double beta);

/// q + alpha (target - q).
double tabular_update(double q, double target, double alpha);

/// Streams reward-rate segments (in seconds) into the discounted sum of the
/// current sojourn. Times are divided by time_unit_s before discounting.
class DiscountedAccumulator {
 public:
  DiscountedAccumulator() = default;
  DiscountedAccumulator(double beta, double time_unit_s);

  void start(double epoch_s);
  void stop() { active_ = false; }
  /// Segment [start_s, start_s + duration_s) with constant rate; start_s must
  /// not precede the epoch.
  void add(double start_s, double duration_s, double rate);

  bool active() const { return active_; }
  double epoch() const { return epoch_; }
  double value() const { return value_; }
  /// Sojourn length in discount units.
  double tau(double now_s) const { return (now_s - epoch_) / unit_; }
  double beta() const { return beta_; }
  double time_unit() const { return unit_; }

 private:
  double beta_ = 0.5;
  double unit_ = 1.0;
  double epoch_ = 0.0;
  double value_ = 0.0;
  bool active_ = false;
};

}  // namespace hrm

#endif  // HRM_SMDP_HPP
