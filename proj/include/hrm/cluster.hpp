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

// Discrete-event simulation of a homogeneous server cluster: strict FCFS
// queues per server, sleep/wake state machines and piecewise-exact energy
// and jobs-in-system integration.

#ifndef HRM_CLUSTER_HPP
#define HRM_CLUSTER_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <optional>
#include <queue>
#include <vector>

#include "hrm/workload.hpp"

namespace hrm {

enum class ModeKind { Sleep, WakingUp, Active, ShuttingDown };

/// Idle is Active with nothing running. transition_end is the ready time
/// while WakingUp and the asleep time while ShuttingDown.
struct ServerMode {
  ModeKind kind = ModeKind::Active;
  double transition_end = 0.0;

  static ServerMode sleep() { return {ModeKind::Sleep, 0.0}; }
  static ServerMode active() { return {ModeKind::Active, 0.0}; }
  static ServerMode waking_up(double ready_at) { return {ModeKind::WakingUp, ready_at}; }
  static ServerMode shutting_down(double asleep_at) { return {ModeKind::ShuttingDown, asleep_at}; }
};

const char* to_string(ModeKind kind);

struct PowerModel {
  double idle_w = 87.0;
  double peak_w = 145.0;

  /// Sleep draws nothing, waking draws peak, shutting down draws idle, and
  /// an active server follows idle + (peak - idle)(2x - x^1.4) in CPU
  /// utilization x.
  double draw(const ServerMode& mode, double cpu_utilization) const;
};

/// power_draw with the default 87 W / 145 W model.
double power_draw(const ServerMode& mode, double cpu_utilization);

struct ClusterConfig {
  int servers = 10;
  int resources = kDefaultResources;
  double t_on_s = 30.0;
  double t_off_s = 30.0;
  PowerModel power;
  ModeKind initial_mode = ModeKind::Active;

  void validate() const;
};

struct RunningJob {
  std::size_t job = 0;  // index into Cluster::jobs()
  double start = 0.0;
  double finish = 0.0;
};

struct Server {
  int id = 0;  // 1-based
  ServerMode mode;
  std::vector<RunningJob> running;
  std::deque<std::size_t> queue;  // FCFS, indices into Cluster::jobs()
  std::vector<double> utilization;

  std::optional<double> timeout_at;  // pending idle timeout
  std::uint64_t timeout_token = 0;

  int jobs_in_system() const { return static_cast<int>(running.size() + queue.size()); }
  bool idle() const { return mode.kind == ModeKind::Active && running.empty() && queue.empty(); }
  double cpu() const { return utilization.empty() ? 0.0 : utilization[0]; }
};

enum class EventKind { JobFinish = 0, WakeComplete, SleepComplete, TimeoutExpired, JobArrival };

struct SimEvent {
  double time = 0.0;
  EventKind kind = EventKind::JobFinish;
  int server = 0;
  std::int64_t job_id = 0;
  std::size_t job = 0;
  std::uint64_t token = 0;
  std::uint64_t seq = 0;
};

/// Time, then kind order, then server id, then job id, then insertion.
struct EventAfter {
  bool operator()(const SimEvent& a, const SimEvent& b) const;
};

enum class EpochKind {
  JobArrival,   // global allocation epoch
  IdleEmpty,    // server idles with an empty queue: the timeout decision
  IdleArrival,  // job arrives at an idle server
  SleepArrival, // job reaches a sleeping server
};

struct Epoch {
  double time = 0.0;
  int server = 0;
  EpochKind kind = EpochKind::JobArrival;
};

/// Which local power-management epoch, if any, an event produces at a server.
/// before is the server state just before the event; queue_empty_after and
/// running_empty_after describe it after the event's state change.
std::optional<EpochKind> classify_epoch(const Server& before, EventKind event,
                                        bool running_empty_after, bool queue_empty_after);

struct JobRecord {
  std::int64_t id = 0;
  int server = 0;
  double arrival = 0.0;
  double start = -1.0;
  double finish = -1.0;
  std::uint64_t queue_order = 0;  // position in the server's queue entries

  double latency() const { return finish - arrival; }
};

struct Accounting {
  std::vector<double> energy_joules;   // per server
  std::vector<double> jobs_integral;   // per server, integral of JQ(t) dt
  std::vector<std::pair<std::int64_t, double>> completed;  // (job id, latency)
  double accumulated_latency = 0.0;

  double total_energy() const;
  double total_jobs_integral() const;
};

/// Instantaneous state over one constant interval of one server.
struct Segment {
  double start = 0.0;
  double duration = 0.0;
  double power_w = 0.0;
  int jobs_in_system = 0;
  double cpu = 0.0;
  ModeKind mode = ModeKind::Active;
};

/// Local power-management hook. Calls for a server carry only that server.
class PowerController {
 public:
  virtual ~PowerController() = default;
  /// Idle-with-empty-queue epoch. Returns the timeout in seconds, or
  /// nullopt to stay on indefinitely.
  virtual std::optional<double> on_idle(const Server& server, double now) = 0;
  /// Every job arrival at the server, before it is queued.
  virtual void on_arrival(const Server& server, double now) { (void)server; (void)now; }
};

class ClusterObserver {
 public:
  virtual ~ClusterObserver() = default;
  virtual void on_segment(const Server& server, const Segment& segment) {
    (void)server;
    (void)segment;
  }
  virtual void on_job_complete(const JobRecord& record, double now) {
    (void)record;
    (void)now;
  }
};

/// Raw material of the allocator state.
struct ClusterSnapshot {
  Eigen::MatrixXd utilization;  // servers x resources
  Eigen::VectorXd job_demands;
  double job_duration = 0.0;    // estimated
};

class Cluster {
 public:
  explicit Cluster(ClusterConfig config);

  const ClusterConfig& config() const { return config_; }
  int size() const { return config_.servers; }
  double now() const { return clock_; }
  const Server& server(int id) const { return servers_.at(static_cast<std::size_t>(id - 1)); }
  const std::vector<Server>& servers() const { return servers_; }
  const std::vector<JobRecord>& jobs() const { return records_; }
  /// Assigned job by the index held in Server::queue and RunningJob::job.
  const Job& assigned_job(std::size_t index) const { return job_table_.at(index); }
  const Accounting& accounting() const { return accounting_; }
  int jobs_in_system() const { return jobs_in_system_; }
  std::size_t pending_events() const { return events_.size(); }

  /// Not owned; null means always on.
  void set_power_controller(PowerController* controller) { controller_ = controller; }
  void add_observer(ClusterObserver* observer) { observers_.push_back(observer); }
  void set_record_epochs(bool on) { record_epochs_ = on; }

  /// Queues job at target at time now (the current clock). Wakes a sleeping
  /// target; a shutting-down target wakes once asleep. Cancels any pending
  /// idle timeout.
  void assign_job(const Job& job, int target, double now);

  /// Processes every event with time <= until, leaves the clock at until and
  /// returns the epochs met since the previous advance (including arrivals).
  std::vector<Epoch> advance(double until);

  /// Processes events until no job is left in the system.
  std::vector<Epoch> run_until_drained();

  /// Integrates every server up to the clock and notifies observers.
  void flush_all();

  ClusterSnapshot snapshot(const Job& job) const;

  /// Starts queued jobs at server id while its head fits; returns job ids.
  std::vector<std::int64_t> try_start_jobs(int id, double now);

  /// Throws InvariantError on any capacity or state inconsistency.
  void check_invariants() const;

 private:
  Server& mut(int id) { return servers_[static_cast<std::size_t>(id - 1)]; }
  void begin();
  void schedule(SimEvent event);
  void process(const SimEvent& event);
  void flush(Server& server);
  void recompute_utilization(Server& server);
  void enter_idle(Server& server);
  void start_shutdown(Server& server);
  void start_wake(Server& server);
  void note_epoch(double time, int server, EpochKind kind);

  ClusterConfig config_;
  std::vector<Server> servers_;
  std::vector<double> last_flush_;
  std::vector<std::uint64_t> queue_counter_;
  std::vector<Job> job_table_;
  std::vector<JobRecord> records_;
  std::priority_queue<SimEvent, std::vector<SimEvent>, EventAfter> events_;
  Accounting accounting_;
  std::vector<Epoch> epochs_;
  PowerController* controller_ = nullptr;
  std::vector<ClusterObserver*> observers_;
  double clock_ = 0.0;
  std::uint64_t seq_ = 0;
  int jobs_in_system_ = 0;
  bool begun_ = false;
  bool record_epochs_ = true;
};

}  // namespace hrm

#endif  // HRM_CLUSTER_HPP
