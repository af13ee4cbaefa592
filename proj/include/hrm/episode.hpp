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

// Drives one trace through a cluster under an allocation policy and a power
// controller, collecting the metrics rows.

#ifndef HRM_EPISODE_HPP
#define HRM_EPISODE_HPP

#include <vector>

#include "hrm/cluster.hpp"

namespace hrm {

class AllocationPolicy {
 public:
  virtual ~AllocationPolicy() = default;
  /// Called at the job's arrival, after the cluster has advanced to it.
  /// Returns a server id in 1..M.
  virtual int choose(Cluster& cluster, const Job& job) = 0;
  virtual void end_episode(Cluster& cluster) { (void)cluster; }
};

inline constexpr double kJoulesPerKwh = 3.6e6;

struct MetricsRow {
  std::size_t jobs_completed = 0;
  double elapsed_s = 0.0;
  double energy_kwh = 0.0;
  double accumulated_latency_s = 0.0;
  double average_power_w = 0.0;
};

struct EpisodeOptions {
  std::size_t metrics_cadence = 1000;
  bool check_invariants = false;  // full scan after every arrival
};

struct EpisodeResult {
  Accounting accounting;
  std::vector<MetricsRow> rows;  // every cadence completions plus the final state
  std::vector<JobRecord> jobs;
  double elapsed_s = 0.0;

  double energy_joules() const { return accounting.total_energy(); }
  double energy_kwh() const { return energy_joules() / kJoulesPerKwh; }
  double average_power_w() const { return elapsed_s > 0 ? energy_joules() / elapsed_s : 0.0; }
  double average_latency_s() const;
  double energy_per_job_j() const;
};

EpisodeResult run_episode(const ClusterConfig& config, const Trace& trace,
                          AllocationPolicy& policy, PowerController* power,
                          const std::vector<ClusterObserver*>& observers = {},
                          const EpisodeOptions& options = {});

}  // namespace hrm

#endif  // HRM_EPISODE_HPP
