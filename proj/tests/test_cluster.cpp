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

#include <cmath>
#include <algorithm>
#include <map>

#include "hrm/baselines.hpp"
#include "hrm/cluster.hpp"
#include "hrm/episode.hpp"

using namespace hrm;

namespace {

double eq_power(double x) { return 87.0 + 58.0 * (2.0 * x - std::pow(x, 1.4)); }

Job make_job(std::int64_t id, double arrival, double duration, std::vector<double> demands) {
  return {id, arrival, duration, std::move(demands), duration};
}

// Sends job id to targets[id], server 1 otherwise.
class Pinned : public AllocationPolicy {
 public:
  explicit Pinned(std::map<std::int64_t, int> targets) : targets_(std::move(targets)) {}
  int choose(Cluster&, const Job& job) override {
    auto it = targets_.find(job.id);
    return it == targets_.end() ? 1 : it->second;
  }

 private:
  std::map<std::int64_t, int> targets_;
};

ClusterConfig single(int resources = 1) {
  ClusterConfig c;
  c.servers = 1;
  c.resources = resources;
  return c;
}

Trace trace_of(std::vector<Job> jobs, int resources) {
  Trace t;
  t.jobs = std::move(jobs);
  t.resource_count = resources;
  return t;
}

}  // namespace

TEST_CASE("power draw follows the closed form") {
  for (double x : {0.0, 0.25, 0.5, 0.75, 1.0})
    CHECK(std::abs(power_draw(ServerMode::active(), x) - eq_power(x)) <= 1e-9);
  CHECK(power_draw(ServerMode::active(), 0.0) == 87.0);
  CHECK(power_draw(ServerMode::active(), 1.0) == 145.0);
  CHECK(power_draw(ServerMode::active(), 0.5) == doctest::Approx(123.0221).epsilon(1e-6));
  CHECK(power_draw(ServerMode::sleep(), 0.7) == 0.0);
  CHECK(power_draw(ServerMode::waking_up(5), 0.0) == 145.0);
  CHECK(power_draw(ServerMode::shutting_down(5), 0.0) == 87.0);
  CHECK_THROWS_AS(power_draw(ServerMode::active(), 1.5), DomainError);
  CHECK_THROWS_AS(power_draw(ServerMode::active(), -0.1), DomainError);
}

TEST_CASE("FCFS head-of-line blocking") {
  const Trace t = trace_of({make_job(1, 0, 10, {0.5}), make_job(2, 2, 12, {0.4}),
                            make_job(3, 4, 9, {0.4})},
                           1);
  RoundRobin rr;
  const auto r = run_episode(single(), t, rr, nullptr);
  std::map<std::int64_t, JobRecord> by_id;
  for (const auto& j : r.jobs) by_id[j.id] = j;
  CHECK(by_id[1].latency() == 10.0);
  CHECK(by_id[2].latency() == 12.0);
  CHECK(by_id[3].start == 10.0);
  CHECK(by_id[3].finish == 19.0);
  CHECK(by_id[3].latency() == 15.0);
}

TEST_CASE("a full-capacity job on an empty server starts at once") {
  const Trace t = trace_of({make_job(1, 5, 60, {1.0})}, 1);
  RoundRobin rr;
  const auto r = run_episode(single(), t, rr, nullptr);
  CHECK(r.jobs[0].start == 5.0);
  CHECK(r.jobs[0].latency() == 60.0);
}

TEST_CASE("active idle energy is exactly 87 W times the interval") {
  Cluster c(single());
  c.advance(100.0);
  c.flush_all();
  CHECK(c.accounting().total_energy() == 8700.0);
}

TEST_CASE("sleeping server wakes for a job and sleeps again") {
  ClusterConfig cfg = single();
  cfg.initial_mode = ModeKind::Sleep;
  const Trace t = trace_of({make_job(1, 0, 60, {1.0})}, 1);
  RoundRobin rr;
  auto ad_hoc = ad_hoc_shutdown();
  const auto r = run_episode(cfg, t, rr, ad_hoc.get());
  CHECK(r.jobs[0].start == 30.0);
  CHECK(r.jobs[0].latency() == 90.0);
  // wake 30 s at peak, 60 s at full load, then the shutdown that follows the
  // job is still in progress when the episode ends at the last completion.
  CHECK(r.energy_joules() == doctest::Approx(30 * 145.0 + 60 * 145.0));
}

TEST_CASE("a job reaching a shutting-down server waits for sleep, then the wake") {
  const Trace t = trace_of({make_job(1, 0, 60, {1.0}), make_job(2, 70, 60, {1.0})}, 1);
  RoundRobin rr;
  auto ad_hoc = ad_hoc_shutdown();
  const auto r = run_episode(single(), t, rr, ad_hoc.get());
  // job 1 ends at 60, shutdown until 90, wake until 120.
  CHECK(r.jobs[1].start == 120.0);
  CHECK(r.jobs[1].latency() == 110.0);
}

TEST_CASE("fixed timeout keeps the server on through short gaps") {
  const Trace t = trace_of({make_job(1, 0, 60, {1.0}), make_job(2, 70, 60, {1.0})}, 1);
  RoundRobin rr;
  FixedTimeout ft(30.0);
  const auto r = run_episode(single(), t, rr, &ft);
  CHECK(r.jobs[1].start == 70.0);
  CHECK(r.energy_joules() == doctest::Approx(120 * 145.0 + 10 * 87.0));
}

TEST_CASE("event tie order") {
  EventAfter after;
  SimEvent finish{10.0, EventKind::JobFinish};
  SimEvent wake{10.0, EventKind::WakeComplete};
  SimEvent sleep{10.0, EventKind::SleepComplete};
  SimEvent timeout{10.0, EventKind::TimeoutExpired};
  SimEvent arrival{10.0, EventKind::JobArrival};
  // EventAfter(a, b) is true when a comes after b.
  CHECK(after(wake, finish));
  CHECK(after(sleep, wake));
  CHECK(after(timeout, sleep));
  CHECK(after(arrival, timeout));
  SimEvent early{9.0, EventKind::JobArrival};
  CHECK(after(finish, early));
}

TEST_CASE("simulation invariants on a seeded synthetic trace") {
  WorkloadSpec spec;
  spec.rate = 0.02;
  spec.jobs = 2000;
  const Trace t = generate_synthetic(spec, 11);
  ClusterConfig cfg;
  cfg.servers = 10;
  RoundRobin rr;
  FixedTimeout ft(30.0);
  EpisodeOptions opts;
  opts.check_invariants = true;
  const auto r = run_episode(cfg, t, rr, &ft, {}, opts);
  CHECK(r.accounting.completed.size() == t.size());
  const double integral = r.accounting.total_jobs_integral();
  CHECK(std::abs(r.accounting.accumulated_latency - integral) <= 1e-6 * integral);
  // FCFS: per server, jobs start in queue order.
  std::map<int, std::vector<const JobRecord*>> per_server;
  for (const auto& j : r.jobs) per_server[j.server].push_back(&j);
  for (auto& [id, jobs] : per_server) {
    std::sort(jobs.begin(), jobs.end(),
              [](const JobRecord* a, const JobRecord* b) { return a->queue_order < b->queue_order; });
    for (std::size_t i = 1; i < jobs.size(); ++i) CHECK(jobs[i]->start >= jobs[i - 1]->start);
  }
}

TEST_CASE("identical runs give identical accounting") {
  WorkloadSpec spec;
  spec.rate = 0.05;
  spec.jobs = 500;
  const Trace t = generate_synthetic(spec, 1);
  ClusterConfig cfg;
  RoundRobin a, b;
  auto pa = ad_hoc_shutdown();
  auto pb = ad_hoc_shutdown();
  const auto ra = run_episode(cfg, t, a, pa.get());
  const auto rb = run_episode(cfg, t, b, pb.get());
  CHECK(ra.accounting.energy_joules == rb.accounting.energy_joules);
  CHECK(ra.accounting.jobs_integral == rb.accounting.jobs_integral);
  CHECK(ra.accounting.completed == rb.accounting.completed);
}

TEST_CASE("cluster rejects bad input") {
  Cluster c(single());
  CHECK_THROWS_AS(c.assign_job(make_job(1, 0, 10, {0.5}), 2, 0.0), DomainError);
  CHECK_THROWS_AS(c.assign_job(make_job(1, 0, 10, {0.5, 0.5}), 1, 0.0), DomainError);
  c.advance(10.0);
  CHECK_THROWS_AS(c.advance(5.0), InvariantError);
  ClusterConfig bad;
  bad.servers = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("jobs pinned to one server queue behind each other") {
  ClusterConfig cfg;
  cfg.servers = 2;
  cfg.resources = 1;
  const Trace t = trace_of({make_job(1, 0, 10, {0.8}), make_job(2, 1, 10, {0.8}), make_job(3, 1, 10, {0.8})}, 1);
  Pinned p({{1, 1}, {2, 1}, {3, 2}});
  const auto r = run_episode(cfg, t, p, nullptr);
  std::map<std::int64_t, JobRecord> by_id;
  for (const auto& j : r.jobs) by_id[j.id] = j;
  CHECK(by_id[2].start == 10.0);
  CHECK(by_id[3].start == 1.0);
  CHECK(by_id[3].server == 2);
}
