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
// Experiment configuration: a flat "key = value" file with command-line
// overrides. Unknown keys are rejected.

#ifndef HRM_CONFIG_HPP
#define HRM_CONFIG_HPP

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "hrm/cluster.hpp"
#include "hrm/global_tier.hpp"
#include "hrm/local_tier.hpp"
#include "hrm/workload.hpp"

namespace hrm {

enum class GlobalPolicyKind { RoundRobin, Drl };
enum class LocalPolicyKind { AlwaysOn, AdHoc, FixedTimeout, Rl };

struct TraceConfig {
  std::string file;  // empty: synthetic
  bool filter = true;
  std::size_t segments = 1;      // file traces are split into this many segments
  std::size_t eval_traces = 1;   // evaluated traces (the last segments for files)
  std::size_t train_traces = 2;  // synthetic training realizations
  double duration_noise = 0.0;   // spread of the duration estimate
  WorkloadSpec synthetic;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string name = "experiment";
  ClusterConfig cluster;
  TraceConfig trace;
  GlobalPolicyKind global_policy = GlobalPolicyKind::RoundRobin;
  LocalPolicyKind local_policy = LocalPolicyKind::AlwaysOn;
  double fixed_timeout_s = 60.0;
  GlobalConfig global;
  LocalConfig local;
  std::size_t metrics_cadence = 1000;
  bool check_invariants = false;
  std::string output_dir = "out";
  std::string models_checkpoint;  // load trained models instead of training

  GroupLayout layout() const { return {cluster.servers, cluster.resources, global.groups}; }
  void validate() const;
};

using Override = std::pair<std::string, std::string>;

/// Parses "key=value".
Override parse_override(const std::string& text);

/// Applies one setting; throws ConfigError for unknown keys or bad values.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Reads "key = value" lines; '#' starts a comment. A line without "=" is a
/// ParseError; bad keys or values are ConfigErrors naming the line.
void apply_config_text(ExperimentConfig& config, std::istream& in);

/// Defaults, then the file (if non-empty), then overrides; validated.
ExperimentConfig load_config(const std::string& path, const std::vector<Override>& overrides = {});

/// Every key with its current value, one "key = value" line each, in a fixed
/// order. Reading the output back reproduces the configuration.
void write_config(std::ostream& out, const ExperimentConfig& config);

std::vector<std::string> config_keys();

std::string to_string(GlobalPolicyKind kind);
std::string to_string(LocalPolicyKind kind);

}  // namespace hrm

#endif  // HRM_CONFIG_HPP
