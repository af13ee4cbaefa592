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

#include "hrm/episode.hpp"

namespace hrm {

namespace {

class MetricsRecorder : public ClusterObserver {
 public:
  MetricsRecorder(Cluster& cluster, std::size_t cadence) : cluster_(cluster), cadence_(cadence) {}

  void on_job_complete(const JobRecord&, double) override {
    ++completed_;
    if (cadence_ > 0 && completed_ % cadence_ == 0) emit();
  }

  void emit() {
    cluster_.flush_all();
    const auto& acct = cluster_.accounting();
    MetricsRow row;
    row.jobs_completed = completed_;
    row.elapsed_s = cluster_.now();
    const double joules = acct.total_energy();
    row.energy_kwh = joules / kJoulesPerKwh;
    row.accumulated_latency_s = acct.accumulated_latency;
    row.average_power_w = row.elapsed_s > 0 ? joules / row.elapsed_s : 0.0;
    rows.push_back(row);
  }

  std::size_t completed() const { return completed_; }
  std::vector<MetricsRow> rows;

 private:
  Cluster& cluster_;
  std::size_t cadence_;
  std::size_t completed_ = 0;
};

}  // namespace

double EpisodeResult::average_latency_s() const {
  return accounting.completed.empty()
             ? 0.0
             : accounting.accumulated_latency / static_cast<double>(accounting.completed.size());
}

double EpisodeResult::energy_per_job_j() const {
  return accounting.completed.empty()
             ? 0.0
             : energy_joules() / static_cast<double>(accounting.completed.size());
}

EpisodeResult run_episode(const ClusterConfig& config, const Trace& trace,
                          AllocationPolicy& policy, PowerController* power,
                          const std::vector<ClusterObserver*>& observers,
                          const EpisodeOptions& options) {
  if (trace.resource_count != config.resources)
    throw ConfigError("trace has " + std::to_string(trace.resource_count) +
                      " resources, cluster has " + std::to_string(config.resources));
  Cluster cluster(config);
  cluster.set_record_epochs(false);
  cluster.set_power_controller(power);
  for (auto* o : observers) cluster.add_observer(o);
  MetricsRecorder recorder(cluster, options.metrics_cadence);
  cluster.add_observer(&recorder);

  for (const Job& job : trace.jobs) {
    cluster.advance(job.arrival_time);
    const int target = policy.choose(cluster, job);
    cluster.assign_job(job, target, job.arrival_time);
    if (options.check_invariants) cluster.check_invariants();
  }
  cluster.run_until_drained();
  cluster.flush_all();
  policy.end_episode(cluster);
  if (recorder.rows.empty() || recorder.rows.back().jobs_completed != recorder.completed())
    recorder.emit();

  EpisodeResult result;
  result.accounting = cluster.accounting();
  result.rows = std::move(recorder.rows);
  result.jobs = cluster.jobs();
  result.elapsed_s = cluster.now();
  return result;
}

}  // namespace hrm
