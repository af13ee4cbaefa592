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

#include "hrm/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hrm {

namespace {

constexpr double kCapacitySlack = 1e-9;

}  // namespace

const char* to_string(ModeKind kind) {
  switch (kind) {
    case ModeKind::Sleep: return "sleep";
    case ModeKind::WakingUp: return "waking_up";
    case ModeKind::Active: return "active";
    case ModeKind::ShuttingDown: return "shutting_down";
  }
  return "?";
}

double PowerModel::draw(const ServerMode& mode, double x) const {
  if (!(x >= 0.0 && x <= 1.0 + kCapacitySlack))
    throw DomainError("cpu utilization " + format_double(x) + " outside [0, 1]");
  x = std::min(x, 1.0);
  switch (mode.kind) {
    case ModeKind::Sleep: return 0.0;
    case ModeKind::WakingUp: return peak_w;
    case ModeKind::ShuttingDown: return idle_w;
    case ModeKind::Active: return idle_w + (peak_w - idle_w) * (2.0 * x - std::pow(x, 1.4));
  }
  return 0.0;
}

double power_draw(const ServerMode& mode, double cpu_utilization) {
  return PowerModel{}.draw(mode, cpu_utilization);
}

void ClusterConfig::validate() const {
  if (servers < 1) throw ConfigError("cluster needs at least one server");
  if (resources < 1) throw ConfigError("cluster needs at least one resource type");
  if (!(t_on_s >= 0) || !(t_off_s >= 0)) throw ConfigError("transition times must be >= 0");
  if (!(power.idle_w >= 0) || !(power.peak_w >= power.idle_w))
    throw ConfigError("power model needs 0 <= idle <= peak");
  if (initial_mode != ModeKind::Active && initial_mode != ModeKind::Sleep)
    throw ConfigError("initial mode must be active or sleep");
}

bool EventAfter::operator()(const SimEvent& a, const SimEvent& b) const {
  if (a.time != b.time) return a.time > b.time;
  if (a.kind != b.kind) return static_cast<int>(a.kind) > static_cast<int>(b.kind);
  if (a.server != b.server) return a.server > b.server;
  if (a.job_id != b.job_id) return a.job_id > b.job_id;
  return a.seq > b.seq;
}

std::optional<EpochKind> classify_epoch(const Server& before, EventKind event,
                                        bool running_empty_after, bool queue_empty_after) {
  switch (event) {
    case EventKind::JobArrival:
      if (before.idle()) return EpochKind::IdleArrival;
      if (before.mode.kind == ModeKind::Sleep) return EpochKind::SleepArrival;
      return std::nullopt;
    case EventKind::JobFinish:
    case EventKind::WakeComplete:
      if (running_empty_after && queue_empty_after) return EpochKind::IdleEmpty;
      return std::nullopt;
    case EventKind::SleepComplete:
      if (!queue_empty_after) return EpochKind::SleepArrival;
      return std::nullopt;
    case EventKind::TimeoutExpired:
      return std::nullopt;
  }
  return std::nullopt;
}

double Accounting::total_energy() const {
  double sum = 0.0;
  for (double e : energy_joules) sum += e;
  return sum;
}

double Accounting::total_jobs_integral() const {
  double sum = 0.0;
  for (double q : jobs_integral) sum += q;
  return sum;
}

Cluster::Cluster(ClusterConfig config) : config_(config) {
  config_.validate();
  const auto m = static_cast<std::size_t>(config_.servers);
  servers_.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    servers_[i].id = static_cast<int>(i + 1);
    servers_[i].mode = config_.initial_mode == ModeKind::Sleep ? ServerMode::sleep()
                                                               : ServerMode::active();
    servers_[i].utilization.assign(static_cast<std::size_t>(config_.resources), 0.0);
  }
  last_flush_.assign(m, 0.0);
  queue_counter_.assign(m, 0);
  accounting_.energy_joules.assign(m, 0.0);
  accounting_.jobs_integral.assign(m, 0.0);
}

void Cluster::begin() {
  if (begun_) return;
  begun_ = true;
  for (auto& s : servers_)
    if (s.idle()) enter_idle(s);
}

void Cluster::schedule(SimEvent event) {
  if (event.time < clock_)
    throw InvariantError("event scheduled in the past at " + format_double(event.time) +
                         " (clock " + format_double(clock_) + ")");
  event.seq = seq_++;
  events_.push(event);
}

void Cluster::note_epoch(double time, int server, EpochKind kind) {
  if (record_epochs_) epochs_.push_back({time, server, kind});
}

void Cluster::flush(Server& s) {
  const auto i = static_cast<std::size_t>(s.id - 1);
  const double dt = clock_ - last_flush_[i];
  if (dt <= 0.0) return;
  Segment seg;
  seg.start = last_flush_[i];
  seg.duration = dt;
  seg.cpu = s.cpu();
  seg.power_w = config_.power.draw(s.mode, std::min(1.0, seg.cpu));
  seg.jobs_in_system = s.jobs_in_system();
  seg.mode = s.mode.kind;
  accounting_.energy_joules[i] += seg.power_w * dt;
  accounting_.jobs_integral[i] += seg.jobs_in_system * dt;
  last_flush_[i] = clock_;
  for (auto* o : observers_) o->on_segment(s, seg);
}

void Cluster::flush_all() {
  for (auto& s : servers_) flush(s);
}

void Cluster::recompute_utilization(Server& s) {
  std::fill(s.utilization.begin(), s.utilization.end(), 0.0);
  for (const auto& r : s.running) {
    const auto& d = job_table_[r.job].demands;
    for (std::size_t p = 0; p < s.utilization.size(); ++p) s.utilization[p] += d[p];
  }
}

std::vector<std::int64_t> Cluster::try_start_jobs(int id, double now) {
  Server& s = mut(id);
  std::vector<std::int64_t> started;
  if (s.mode.kind != ModeKind::Active) return started;
  while (!s.queue.empty()) {
    const std::size_t head = s.queue.front();
    const Job& job = job_table_[head];
    bool fits = true;
    for (std::size_t p = 0; p < s.utilization.size(); ++p)
      if (s.utilization[p] + job.demands[p] > 1.0 + kCapacitySlack) fits = false;
    if (!fits) break;
    s.queue.pop_front();
    const double finish = now + job.duration;
    s.running.push_back({head, now, finish});
    for (std::size_t p = 0; p < s.utilization.size(); ++p) s.utilization[p] += job.demands[p];
    records_[head].start = now;
    started.push_back(job.id);
    SimEvent ev;
    ev.time = finish;
    ev.kind = EventKind::JobFinish;
    ev.server = s.id;
    ev.job_id = job.id;
    ev.job = head;
    schedule(ev);
  }
  return started;
}

void Cluster::enter_idle(Server& s) {
  note_epoch(clock_, s.id, EpochKind::IdleEmpty);
  if (!controller_) return;
  const std::optional<double> timeout = controller_->on_idle(s, clock_);
  if (!timeout) return;
  if (!(*timeout >= 0.0) || !std::isfinite(*timeout))
    throw InvariantError("power controller returned an invalid timeout");
  if (*timeout == 0.0) {
    start_shutdown(s);
    return;
  }
  s.timeout_at = clock_ + *timeout;
  ++s.timeout_token;
  SimEvent ev;
  ev.time = *s.timeout_at;
  ev.kind = EventKind::TimeoutExpired;
  ev.server = s.id;
  ev.token = s.timeout_token;
  schedule(ev);
}

void Cluster::start_shutdown(Server& s) {
  s.timeout_at.reset();
  ++s.timeout_token;
  s.mode = ServerMode::shutting_down(clock_ + config_.t_off_s);
  SimEvent ev;
  ev.time = s.mode.transition_end;
  ev.kind = EventKind::SleepComplete;
  ev.server = s.id;
  schedule(ev);
}

void Cluster::start_wake(Server& s) {
  s.mode = ServerMode::waking_up(clock_ + config_.t_on_s);
  SimEvent ev;
  ev.time = s.mode.transition_end;
  ev.kind = EventKind::WakeComplete;
  ev.server = s.id;
  schedule(ev);
}

void Cluster::assign_job(const Job& job, int target, double now) {
  if (target < 1 || target > config_.servers)
    throw DomainError("unknown server id " + std::to_string(target));
  if (now != clock_)
    throw InvariantError("assign_job at " + format_double(now) + " but clock is " +
                         format_double(clock_));
  if (static_cast<int>(job.demands.size()) != config_.resources)
    throw DomainError("job has " + std::to_string(job.demands.size()) + " demands, cluster has " +
                      std::to_string(config_.resources) + " resources");
  begin();
  Server& s = mut(target);
  flush(s);
  if (controller_) controller_->on_arrival(s, now);
  note_epoch(now, 0, EpochKind::JobArrival);
  if (auto local = classify_epoch(s, EventKind::JobArrival, s.running.empty(), s.queue.empty()))
    note_epoch(now, s.id, *local);

  const std::size_t index = job_table_.size();
  job_table_.push_back(job);
  JobRecord rec;
  rec.id = job.id;
  rec.server = target;
  rec.arrival = now;
  rec.queue_order = queue_counter_[static_cast<std::size_t>(target - 1)]++;
  records_.push_back(rec);
  s.queue.push_back(index);
  ++jobs_in_system_;

  if (s.timeout_at) {
    s.timeout_at.reset();
    ++s.timeout_token;
  }
  switch (s.mode.kind) {
    case ModeKind::Active: try_start_jobs(target, now); break;
    case ModeKind::Sleep: start_wake(s); break;
    case ModeKind::WakingUp:
    case ModeKind::ShuttingDown: break;  // wake follows SleepComplete
  }
}

void Cluster::process(const SimEvent& ev) {
  if (ev.time < clock_) throw InvariantError("event in the past");
  clock_ = ev.time;
  Server& s = mut(ev.server);
  switch (ev.kind) {
    case EventKind::JobFinish: {
      flush(s);
      auto it = std::find_if(s.running.begin(), s.running.end(),
                             [&](const RunningJob& r) { return r.job == ev.job; });
      if (it == s.running.end()) throw InvariantError("finish for a job that is not running");
      s.running.erase(it);
      recompute_utilization(s);
      --jobs_in_system_;
      JobRecord& rec = records_[ev.job];
      rec.finish = clock_;
      accounting_.completed.emplace_back(rec.id, rec.latency());
      accounting_.accumulated_latency += rec.latency();
      try_start_jobs(s.id, clock_);
      for (auto* o : observers_) o->on_job_complete(rec, clock_);
      if (s.idle()) enter_idle(s);
      break;
    }
    case EventKind::WakeComplete: {
      flush(s);
      s.mode = ServerMode::active();
      try_start_jobs(s.id, clock_);
      if (s.idle()) enter_idle(s);
      break;
    }
    case EventKind::SleepComplete: {
      flush(s);
      s.mode = ServerMode::sleep();
      if (!s.queue.empty()) {
        note_epoch(clock_, s.id, EpochKind::SleepArrival);
        start_wake(s);
      }
      break;
    }
    case EventKind::TimeoutExpired: {
      if (ev.token != s.timeout_token || !s.timeout_at || !s.idle()) break;  // cancelled
      flush(s);
      start_shutdown(s);
      break;
    }
    case EventKind::JobArrival:
      throw InvariantError("arrivals are injected through assign_job");
  }
  for (double u : s.utilization)
    if (u > 1.0 + kCapacitySlack) throw InvariantError("server over capacity");
}

std::vector<Epoch> Cluster::advance(double until) {
  if (until < clock_)
    throw InvariantError("advance to " + format_double(until) + " before clock " +
                         format_double(clock_));
  begin();
  while (!events_.empty() && events_.top().time <= until) {
    const SimEvent ev = events_.top();
    events_.pop();
    process(ev);
  }
  clock_ = until;
  std::vector<Epoch> out;
  out.swap(epochs_);
  return out;
}

std::vector<Epoch> Cluster::run_until_drained() {
  begin();
  while (jobs_in_system_ > 0) {
    if (events_.empty()) throw InvariantError("jobs in system but no pending events");
    const SimEvent ev = events_.top();
    events_.pop();
    process(ev);
  }
  std::vector<Epoch> out;
  out.swap(epochs_);
  return out;
}

ClusterSnapshot Cluster::snapshot(const Job& job) const {
  ClusterSnapshot snap;
  snap.utilization.resize(config_.servers, config_.resources);
  for (int m = 0; m < config_.servers; ++m)
    for (int p = 0; p < config_.resources; ++p)
      snap.utilization(m, p) = std::clamp(servers_[static_cast<std::size_t>(m)].utilization[static_cast<std::size_t>(p)], 0.0, 1.0);
  snap.job_demands = Eigen::Map<const Eigen::VectorXd>(job.demands.data(),
                                                       static_cast<Eigen::Index>(job.demands.size()));
  snap.job_duration = job.estimated_duration > 0 ? job.estimated_duration : job.duration;
  return snap;
}

void Cluster::check_invariants() const {
  int in_system = 0;
  for (const auto& s : servers_) {
    for (double u : s.utilization)
      if (u > 1.0 + kCapacitySlack || u < -kCapacitySlack)
        throw InvariantError("server " + std::to_string(s.id) + " utilization out of range");
    if (!s.running.empty() && s.mode.kind != ModeKind::Active)
      throw InvariantError("server " + std::to_string(s.id) + " runs jobs while not active");
    in_system += s.jobs_in_system();
  }
  if (in_system != jobs_in_system_) throw InvariantError("jobs-in-system count drifted");
}

}  // namespace hrm
