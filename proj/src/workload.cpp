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

#include "hrm/workload.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <string_view>

namespace hrm {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char* what) {
  T value{};
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec != std::errc() || ptr != last)
    throw ParseError(std::string("non-numeric ") + what + " '" + std::string(field) + "'", line);
  return value;
}

}  // namespace

ParsedTrace parse_trace(std::istream& in, const ParseOptions& options) {
  const std::size_t columns = 3 + static_cast<std::size_t>(options.resource_count);
  ParsedTrace result;
  result.trace.resource_count = options.resource_count;
  std::string raw;
  std::size_t line_no = 0;
  bool first_content = true;
  double last_arrival = -INFINITY;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    const bool header_candidate = first_content;
    first_content = false;
    if (header_candidate && line.substr(0, 2) == "id") continue;

    const auto fields = split_csv(line);
    if (fields.size() != columns)
      throw ParseError("expected " + std::to_string(columns) + " columns, got " +
                           std::to_string(fields.size()),
                       line_no);
    Job job;
    job.id = parse_number<std::int64_t>(fields[0], line_no, "id");
    job.arrival_time = parse_number<double>(fields[1], line_no, "arrival time");
    job.duration = parse_number<double>(fields[2], line_no, "duration");
    job.demands.reserve(static_cast<std::size_t>(options.resource_count));
    for (std::size_t p = 3; p < columns; ++p)
      job.demands.push_back(parse_number<double>(fields[p], line_no, "demand"));
    job.estimated_duration = job.duration;

    if (!std::isfinite(job.arrival_time) || job.arrival_time < 0)
      throw TraceDomainError("arrival time must be finite and >= 0", line_no);
    if (!std::isfinite(job.duration) || job.duration <= 0)
      throw TraceDomainError("duration must be positive", line_no);
    for (double d : job.demands)
      if (!(d > 0.0 && d <= 1.0)) throw TraceDomainError("demand outside (0, 1]", line_no);
    if (job.arrival_time < last_arrival)
      throw TraceOrderError("arrival time decreases", line_no);
    last_arrival = job.arrival_time;

    if (options.filter_durations &&
        (job.duration < kMinTraceDuration || job.duration > kMaxTraceDuration)) {
      ++result.dropped;
      continue;
    }
    result.trace.jobs.push_back(std::move(job));
  }
  return result;
}

ParsedTrace load_trace(const std::string& path, const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace " + path);
  return parse_trace(in, options);
}

void render_trace(std::ostream& out, const Trace& trace) {
  out << "id,arrival_time_s,duration_s,cpu,mem,disk\n";
  for (const Job& job : trace.jobs) {
    out << job.id << ',' << format_double(job.arrival_time) << ','
        << format_double(job.duration);
    for (double d : job.demands) out << ',' << format_double(d);
    out << '\n';
  }
}

Trace generate_synthetic(const WorkloadSpec& spec, std::uint64_t seed) {
  if (spec.jobs == 0) throw ConfigError("synthetic workload needs at least one job");
  if (spec.resource_count < 1) throw ConfigError("resource count must be >= 1");
  if (spec.arrival == ArrivalProcess::Poisson && !(spec.rate > 0))
    throw ConfigError("arrival rate must be positive");
  if (spec.arrival == ArrivalProcess::Bursty) {
    if (!(spec.high_rate > 0)) throw ConfigError("bursty high rate must be positive");
    if (!(spec.low_rate >= 0)) throw ConfigError("bursty low rate must be >= 0");
    if (!(spec.high_phase_s > 0) || !(spec.low_phase_s > 0))
      throw ConfigError("bursty phase lengths must be positive");
  }
  if (!(spec.duration_min_s > 0) || !(spec.duration_max_s >= spec.duration_min_s))
    throw ConfigError("empty duration range");
  if (!(spec.demand_min > 0) || !(spec.demand_max >= spec.demand_min) || spec.demand_max > 1)
    throw ConfigError("demand range must lie in (0, 1]");

  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> exp1(1.0);

  Trace trace;
  trace.resource_count = spec.resource_count;
  trace.jobs.reserve(spec.jobs);

  double t = 0.0;
  double phase_end = spec.high_phase_s;
  bool high = true;
  for (std::size_t i = 0; i < spec.jobs; ++i) {
    if (spec.arrival == ArrivalProcess::Poisson) {
      t += exp1(rng) / spec.rate;
    } else {
      // Piecewise-constant rate: a draw that overruns the phase restarts at
      // the boundary (memoryless).
      for (;;) {
        const double rate = high ? spec.high_rate : spec.low_rate;
        if (rate > 0) {
          const double next = t + exp1(rng) / rate;
          if (next < phase_end) {
            t = next;
            break;
          }
        }
        t = phase_end;
        high = !high;
        phase_end += high ? spec.high_phase_s : spec.low_phase_s;
      }
    }
    Job job;
    job.id = static_cast<std::int64_t>(i + 1);
    job.arrival_time = t;
    const double u = unit(rng);
    job.duration = spec.duration == DurationDistribution::Uniform
                       ? spec.duration_min_s + u * (spec.duration_max_s - spec.duration_min_s)
                       : spec.duration_min_s *
                             std::pow(spec.duration_max_s / spec.duration_min_s, u);
    job.demands.resize(static_cast<std::size_t>(spec.resource_count));
    for (double& d : job.demands) d = spec.demand_min + unit(rng) * (spec.demand_max - spec.demand_min);
    job.estimated_duration = job.duration;
    trace.jobs.push_back(std::move(job));
  }
  return trace;
}

std::vector<Trace> split_segments(const Trace& trace, std::size_t n) {
  if (n == 0) throw DomainError("segment count must be >= 1");
  if (n > trace.jobs.size())
    throw DomainError("cannot split " + std::to_string(trace.jobs.size()) + " jobs into " +
                      std::to_string(n) + " segments");
  const std::size_t base = trace.jobs.size() / n;
  const std::size_t extra = trace.jobs.size() % n;
  std::vector<Trace> out;
  out.reserve(n);
  std::size_t pos = 0;
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t len = base + (s < extra ? 1 : 0);
    Trace seg;
    seg.resource_count = trace.resource_count;
    seg.jobs.assign(trace.jobs.begin() + static_cast<std::ptrdiff_t>(pos),
                    trace.jobs.begin() + static_cast<std::ptrdiff_t>(pos + len));
    const double origin = seg.jobs.front().arrival_time;
    for (Job& job : seg.jobs) job.arrival_time -= origin;
    out.push_back(std::move(seg));
    pos += len;
  }
  return out;
}

void apply_duration_noise(Trace& trace, double spread, Rng& rng) {
  if (!(spread >= 0 && spread < 1)) throw ConfigError("duration noise spread must be in [0, 1)");
  std::uniform_real_distribution<double> u(1.0 - spread, 1.0 + spread);
  for (Job& job : trace.jobs) job.estimated_duration = job.duration * (spread > 0 ? u(rng) : 1.0);
}

}  // namespace hrm
