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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hrm/workload.hpp"

using namespace hrm;

TEST_CASE("parse_trace maps one row onto a job") {
  std::istringstream in("7,0.0,120.0,0.5,0.25,0.1\n");
  const auto parsed = parse_trace(in);
  REQUIRE(parsed.trace.size() == 1);
  const Job& j = parsed.trace.jobs[0];
  CHECK(j.id == 7);
  CHECK(j.arrival_time == 0.0);
  CHECK(j.duration == 120.0);
  CHECK(j.demands == std::vector<double>{0.5, 0.25, 0.1});
  CHECK(j.estimated_duration == 120.0);
}

TEST_CASE("parse_trace keeps row order and skips header and blanks") {
  std::istringstream in(
      "id,arrival_time_s,duration_s,cpu,mem,disk\n"
      "1,0,100,0.1,0.2,0.3\n"
      "\n"
      "2,5,200,0.4,0.5,0.6\n"
      "3,5,300,1,1,1\n");
  const auto parsed = parse_trace(in);
  std::vector<Job> expected{
      {1, 0.0, 100.0, {0.1, 0.2, 0.3}, 100.0},
      {2, 5.0, 200.0, {0.4, 0.5, 0.6}, 200.0},
      {3, 5.0, 300.0, {1.0, 1.0, 1.0}, 300.0},
  };
  CHECK(parsed.trace.jobs == expected);
  CHECK(parsed.dropped == 0);
}

TEST_CASE("parse_trace errors carry the line number") {
  SUBCASE("decreasing arrival") {
    std::istringstream in("1,10.0,100,0.1,0.1,0.1\n2,5.0,100,0.1,0.1,0.1\n");
    try {
      parse_trace(in);
      FAIL("no error");
    } catch (const TraceOrderError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("demand out of range") {
    std::istringstream in("1,0,100,0.1,1.5,0.1\n");
    CHECK_THROWS_AS(parse_trace(in), TraceDomainError);
  }
  SUBCASE("zero demand") {
    std::istringstream in("1,0,100,0,0.5,0.1\n");
    CHECK_THROWS_AS(parse_trace(in), TraceDomainError);
  }
  SUBCASE("wrong column count") {
    std::istringstream in("1,0,100,0.1,0.1,0.1\n2,1,100,0.1\n");
    try {
      parse_trace(in);
      FAIL("no error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("non-numeric") {
    std::istringstream in("1,zero,100,0.1,0.1,0.1\n");
    CHECK_THROWS_AS(parse_trace(in), ParseError);
  }
}

TEST_CASE("duration filter drops rows outside one minute to two hours") {
  std::istringstream in("1,0,30,0.1,0.1,0.1\n2,1,600,0.1,0.1,0.1\n3,2,9000,0.1,0.1,0.1\n");
  const auto parsed = parse_trace(in);
  CHECK(parsed.trace.size() == 1);
  CHECK(parsed.dropped == 2);
  std::istringstream again("1,0,30,0.1,0.1,0.1\n2,1,600,0.1,0.1,0.1\n3,2,9000,0.1,0.1,0.1\n");
  CHECK(parse_trace(again, {false, 3}).trace.size() == 3);
}

TEST_CASE("render_trace round-trips exactly") {
  WorkloadSpec spec;
  spec.jobs = 200;
  const Trace t = generate_synthetic(spec, 3);
  std::stringstream buf;
  render_trace(buf, t);
  const auto back = parse_trace(buf, {false, 3});
  CHECK(back.trace == t);
}

TEST_CASE("synthetic generation is deterministic in the seed") {
  WorkloadSpec spec;
  spec.rate = 0.1;
  spec.jobs = 1000;
  const Trace a = generate_synthetic(spec, 42);
  const Trace b = generate_synthetic(spec, 42);
  CHECK(a == b);
  CHECK(a.size() == 1000);
  CHECK_FALSE(a == generate_synthetic(spec, 43));
  for (std::size_t i = 1; i < a.size(); ++i) CHECK(a.jobs[i].arrival_time >= a.jobs[i - 1].arrival_time);
  for (const Job& j : a.jobs) {
    CHECK(j.duration >= spec.duration_min_s);
    CHECK(j.duration <= spec.duration_max_s);
    for (double d : j.demands) {
      CHECK(d >= spec.demand_min);
      CHECK(d <= spec.demand_max);
    }
  }
}

TEST_CASE("Poisson mean inter-arrival matches the rate") {
  WorkloadSpec spec;
  spec.rate = 0.1;
  spec.jobs = 20000;
  const Trace t = generate_synthetic(spec, 5);
  const double mean = (t.jobs.back().arrival_time - t.jobs.front().arrival_time) / double(t.size() - 1);
  CHECK(mean == doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("bursty trace is silent during low phases with zero rate") {
  WorkloadSpec spec;
  spec.arrival = ArrivalProcess::Bursty;
  spec.high_rate = 1.0;
  spec.low_rate = 0.0;
  spec.high_phase_s = 100.0;
  spec.low_phase_s = 300.0;
  spec.jobs = 500;
  const Trace t = generate_synthetic(spec, 9);
  for (const Job& j : t.jobs) CHECK(std::fmod(j.arrival_time, 400.0) < 100.0);
}

TEST_CASE("invalid workload specs are rejected") {
  WorkloadSpec spec;
  spec.rate = 0.0;
  CHECK_THROWS_AS(generate_synthetic(spec, 1), ConfigError);
  spec = {};
  spec.jobs = 0;
  CHECK_THROWS_AS(generate_synthetic(spec, 1), ConfigError);
  spec = {};
  spec.duration_min_s = 100;
  spec.duration_max_s = 50;
  CHECK_THROWS_AS(generate_synthetic(spec, 1), ConfigError);
}

TEST_CASE("split_segments") {
  Trace t;
  for (int i = 0; i < 10; ++i) t.jobs.push_back({i + 1, double(i), 100.0, {0.1, 0.1, 0.1}, 100.0});
  SUBCASE("second half re-based") {
    const auto segs = split_segments(t, 2);
    REQUIRE(segs.size() == 2);
    for (int i = 0; i < 5; ++i) CHECK(segs[1].jobs[std::size_t(i)].arrival_time == double(i));
  }
  SUBCASE("identity") {
    const auto segs = split_segments(t, 1);
    REQUIRE(segs.size() == 1);
    CHECK(segs[0] == t);
  }
  SUBCASE("remainder goes to earlier segments") {
    const auto segs = split_segments(t, 3);
    CHECK(segs[0].size() == 4);
    CHECK(segs[1].size() == 3);
    CHECK(segs[2].size() == 3);
  }
  SUBCASE("too many segments") { CHECK_THROWS_AS(split_segments(t, 11), DomainError); }
  WorkloadSpec spec;
  spec.jobs = 100;
  const auto four = split_segments(generate_synthetic(spec, 1), 4);
  for (const Trace& s : four) {
    CHECK(s.size() == 25);
    CHECK(s.jobs.front().arrival_time == 0.0);
  }
}

TEST_CASE("duration noise touches only the estimate") {
  WorkloadSpec spec;
  spec.jobs = 300;
  Trace t = generate_synthetic(spec, 2);
  const Trace orig = t;
  Rng rng(4);
  apply_duration_noise(t, 0.2, rng);
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(t.jobs[i].duration == orig.jobs[i].duration);
    CHECK(t.jobs[i].estimated_duration >= 0.8 * t.jobs[i].duration - 1e-9);
    CHECK(t.jobs[i].estimated_duration <= 1.2 * t.jobs[i].duration + 1e-9);
  }
}
