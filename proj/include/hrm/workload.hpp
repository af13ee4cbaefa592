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

// Job traces: CSV ingestion, synthetic generation and segmentation.

#ifndef HRM_WORKLOAD_HPP
#define HRM_WORKLOAD_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hrm/common.hpp"

namespace hrm {

inline constexpr int kDefaultResources = 3;  // cpu, mem, disk
inline constexpr double kMinTraceDuration = 60.0;
inline constexpr double kMaxTraceDuration = 7200.0;

/// One VM request. Demands are fractions of one server's capacity.
struct Job {
  std::int64_t id = 0;
  double arrival_time = 0.0;
  double duration = 0.0;
  std::vector<double> demands;
  /// Duration as known to the allocator; equals duration unless noise is
  /// applied.
  double estimated_duration = 0.0;

  bool operator==(const Job&) const = default;
};

struct Trace {
  std::vector<Job> jobs;
  int resource_count = kDefaultResources;

  std::size_t size() const { return jobs.size(); }
  bool operator==(const Trace&) const = default;
};

/// Raised on a decreasing arrival time.
class TraceOrderError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// Raised on a demand outside (0, 1] or a nonpositive duration.
class TraceDomainError : public ParseError {
 public:
  using ParseError::ParseError;
};

struct ParseOptions {
  bool filter_durations = true;
  int resource_count = kDefaultResources;
};

struct ParsedTrace {
  Trace trace;
  std::size_t dropped = 0;  // rows removed by the duration filter
};

/// Reads "id,arrival_time_s,duration_s,cpu,mem,disk" rows. A header line is
/// optional; blank lines are skipped.
ParsedTrace parse_trace(std::istream& in, const ParseOptions& options = {});
ParsedTrace load_trace(const std::string& path, const ParseOptions& options = {});

/// Writes the trace with a header, numbers in shortest round-trip form.
void render_trace(std::ostream& out, const Trace& trace);

enum class ArrivalProcess { Poisson, Bursty };
enum class DurationDistribution { Uniform, LogUniform };

struct WorkloadSpec {
  ArrivalProcess arrival = ArrivalProcess::Poisson;
  double rate = 0.1;  // jobs/s, Poisson
  // Bursty: alternating phases starting with the high-rate phase. A zero
  // low rate makes the low phase silent.
  double high_rate = 1.0;
  double low_rate = 0.0;
  double high_phase_s = 100.0;
  double low_phase_s = 300.0;

  DurationDistribution duration = DurationDistribution::LogUniform;
  double duration_min_s = kMinTraceDuration;
  double duration_max_s = kMaxTraceDuration;

  // Each resource demand is uniform over [demand_min, demand_max].
  double demand_min = 0.05;
  double demand_max = 0.5;

  std::size_t jobs = 1000;
  int resource_count = kDefaultResources;
};

/// Deterministic in (spec, seed).
Trace generate_synthetic(const WorkloadSpec& spec, std::uint64_t seed);

/// Splits into n contiguous segments (earlier segments take the remainder)
/// and shifts each so that its first arrival is at time 0.
std::vector<Trace> split_segments(const Trace& trace, std::size_t n);

/// Replaces each estimated duration by duration * U[1 - spread, 1 + spread].
void apply_duration_noise(Trace& trace, double spread, Rng& rng);

}  // namespace hrm

#endif  // HRM_WORKLOAD_HPP
