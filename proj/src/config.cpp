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
#include "hrm/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

namespace hrm {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw ConfigError(key + ": expected " + expected + ", got '" + value + "'");
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

long long to_integer(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

std::size_t to_count(const std::string& key, const std::string& v) {
  const long long x = to_integer(key, v);
  if (x < 0) bad_value(key, v, "a non-negative integer");
  return static_cast<std::size_t>(x);
}

int to_int(const std::string& key, const std::string& v) {
  return static_cast<int>(to_integer(key, v));
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "a boolean");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty()) bad_value(key, v, "a comma-separated list");
  return out;
}

std::string from_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + format_double(xs[i]);
  return out;
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

struct Entry {
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define HRM_DOUBLE(KEY, FIELD)                                                                  \
  Entry {                                                                                        \
    KEY, [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.FIELD = to_double(k, v); }, \
        [](const ExperimentConfig& c) { return format_double(c.FIELD); }                        \
  }
#define HRM_INT(KEY, FIELD)                                                                     \
  Entry {                                                                                        \
    KEY, [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.FIELD = to_int(k, v); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.FIELD); }                       \
  }
#define HRM_COUNT(KEY, FIELD)                                                                   \
  Entry {                                                                                        \
    KEY, [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.FIELD = to_count(k, v); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.FIELD); }                       \
  }
#define HRM_BOOL(KEY, FIELD)                                                                    \
  Entry {                                                                                        \
    KEY, [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.FIELD = to_bool(k, v); }, \
        [](const ExperimentConfig& c) { return from_bool(c.FIELD); }                            \
  }
#define HRM_STRING(KEY, FIELD)                                                                  \
  Entry {                                                                                        \
    KEY, [](ExperimentConfig& c, const std::string&, const std::string& v) { c.FIELD = v; },    \
        [](const ExperimentConfig& c) { return c.FIELD; }                                       \
  }

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = {
      Entry{"seed",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              const long long s = to_integer(k, v);
              if (s < 0) bad_value(k, v, "a non-negative integer");
              c.seed = static_cast<std::uint64_t>(s);
            },
            [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
      HRM_STRING("name", name),

      HRM_INT("cluster.servers", cluster.servers),
      HRM_INT("cluster.resources", cluster.resources),
      HRM_DOUBLE("cluster.t_on_s", cluster.t_on_s),
      HRM_DOUBLE("cluster.t_off_s", cluster.t_off_s),
      HRM_DOUBLE("cluster.idle_w", cluster.power.idle_w),
      HRM_DOUBLE("cluster.peak_w", cluster.power.peak_w),
      Entry{"cluster.initial_mode",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              if (v == "active") c.cluster.initial_mode = ModeKind::Active;
              else if (v == "sleep") c.cluster.initial_mode = ModeKind::Sleep;
              else bad_value(k, v, "active or sleep");
            },
            [](const ExperimentConfig& c) {
              return std::string(c.cluster.initial_mode == ModeKind::Sleep ? "sleep" : "active");
            }},

      HRM_STRING("trace.file", trace.file),
      HRM_BOOL("trace.filter", trace.filter),
      HRM_COUNT("trace.segments", trace.segments),
      HRM_COUNT("trace.eval_traces", trace.eval_traces),
      HRM_COUNT("trace.train_traces", trace.train_traces),
      HRM_DOUBLE("trace.duration_noise", trace.duration_noise),
      Entry{"trace.synthetic.arrival",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              if (v == "poisson") c.trace.synthetic.arrival = ArrivalProcess::Poisson;
              else if (v == "bursty") c.trace.synthetic.arrival = ArrivalProcess::Bursty;
              else bad_value(k, v, "poisson or bursty");
            },
            [](const ExperimentConfig& c) {
              return std::string(c.trace.synthetic.arrival == ArrivalProcess::Bursty ? "bursty" : "poisson");
            }},
      HRM_DOUBLE("trace.synthetic.rate", trace.synthetic.rate),
      HRM_DOUBLE("trace.synthetic.high_rate", trace.synthetic.high_rate),
      HRM_DOUBLE("trace.synthetic.low_rate", trace.synthetic.low_rate),
      HRM_DOUBLE("trace.synthetic.high_phase_s", trace.synthetic.high_phase_s),
      HRM_DOUBLE("trace.synthetic.low_phase_s", trace.synthetic.low_phase_s),
      Entry{"trace.synthetic.duration",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              if (v == "uniform") c.trace.synthetic.duration = DurationDistribution::Uniform;
              else if (v == "loguniform") c.trace.synthetic.duration = DurationDistribution::LogUniform;
              else bad_value(k, v, "uniform or loguniform");
            },
            [](const ExperimentConfig& c) {
              return std::string(c.trace.synthetic.duration == DurationDistribution::Uniform ? "uniform"
                                                                                           : "loguniform");
            }},
      HRM_DOUBLE("trace.synthetic.duration_min_s", trace.synthetic.duration_min_s),
      HRM_DOUBLE("trace.synthetic.duration_max_s", trace.synthetic.duration_max_s),
      HRM_DOUBLE("trace.synthetic.demand_min", trace.synthetic.demand_min),
      HRM_DOUBLE("trace.synthetic.demand_max", trace.synthetic.demand_max),
      HRM_COUNT("trace.synthetic.jobs", trace.synthetic.jobs),

      Entry{"policy.global",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              if (v == "round_robin") c.global_policy = GlobalPolicyKind::RoundRobin;
              else if (v == "drl") c.global_policy = GlobalPolicyKind::Drl;
              else bad_value(k, v, "round_robin or drl");
            },
            [](const ExperimentConfig& c) { return to_string(c.global_policy); }},
      Entry{"policy.local",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              if (v == "always_on") c.local_policy = LocalPolicyKind::AlwaysOn;
              else if (v == "ad_hoc") c.local_policy = LocalPolicyKind::AdHoc;
              else if (v == "fixed_timeout") c.local_policy = LocalPolicyKind::FixedTimeout;
              else if (v == "rl") c.local_policy = LocalPolicyKind::Rl;
              else bad_value(k, v, "always_on, ad_hoc, fixed_timeout or rl");
            },
            [](const ExperimentConfig& c) { return to_string(c.local_policy); }},
      HRM_DOUBLE("policy.fixed_timeout_s", fixed_timeout_s),

      HRM_INT("global.groups", global.groups),
      HRM_DOUBLE("global.beta", global.beta),
      HRM_DOUBLE("global.time_unit_s", global.time_unit_s),
      HRM_DOUBLE("global.alpha", global.alpha),
      HRM_DOUBLE("global.epsilon_start", global.epsilon_start),
      HRM_DOUBLE("global.epsilon_end", global.epsilon_end),
      HRM_DOUBLE("global.eval_epsilon", global.eval_epsilon),
      HRM_DOUBLE("global.w1", global.w1),
      HRM_DOUBLE("global.w2", global.w2),
      HRM_DOUBLE("global.w3", global.w3),
      HRM_DOUBLE("global.hot_spot_threshold", global.hot_spot_threshold),
      HRM_DOUBLE("global.reward_scale", global.reward_scale),
      HRM_DOUBLE("global.duration_scale_s", global.duration_scale_s),
      HRM_BOOL("global.feasibility_mask", global.feasibility_mask),
      HRM_COUNT("global.memory_capacity", global.memory_capacity),
      HRM_INT("global.minibatch", global.minibatch),
      HRM_INT("global.refit_steps", global.refit_steps),
      HRM_DOUBLE("global.learning_rate", global.learning_rate),
      HRM_DOUBLE("global.clip_norm", global.clip_norm),
      HRM_INT("global.offline_replays", global.offline_replays),
      HRM_INT("global.online_episodes", global.online_episodes),
      HRM_INT("global.autoencoder_epochs", global.autoencoder_epochs),
      HRM_COUNT("global.autoencoder_samples", global.autoencoder_samples),

      HRM_DOUBLE("local.w", local.w),
      HRM_DOUBLE("local.power_unit_w", local.power_unit_w),
      HRM_DOUBLE("local.beta", local.beta),
      HRM_DOUBLE("local.time_unit_s", local.time_unit_s),
      HRM_DOUBLE("local.alpha", local.alpha),
      HRM_DOUBLE("local.epsilon_start", local.epsilon_start),
      HRM_DOUBLE("local.epsilon_end", local.epsilon_end),
      Entry{"local.timeouts",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.local.timeouts = to_list(k, v); },
            [](const ExperimentConfig& c) { return from_list(c.local.timeouts); }},
      HRM_INT("local.categories", local.categories),
      HRM_DOUBLE("local.interarrival_scale_s", local.interarrival_scale_s),
      HRM_INT("local.train_episodes", local.train_episodes),
      HRM_INT("local.predictor_steps", local.predictor_steps),
      HRM_INT("local.predictor_batch", local.predictor_batch),
      HRM_DOUBLE("local.predictor_learning_rate", local.predictor_learning_rate),
      HRM_DOUBLE("local.bootstrap_timeout_s", local.bootstrap_timeout_s),

      HRM_COUNT("metrics.cadence", metrics_cadence),
      HRM_BOOL("metrics.check_invariants", check_invariants),
      HRM_STRING("output.dir", output_dir),
      HRM_STRING("models.checkpoint", models_checkpoint),
  };
  return entries;
}

#undef HRM_DOUBLE
#undef HRM_INT
#undef HRM_COUNT
#undef HRM_BOOL
#undef HRM_STRING

}  // namespace

std::string to_string(GlobalPolicyKind kind) {
  return kind == GlobalPolicyKind::Drl ? "drl" : "round_robin";
}

std::string to_string(LocalPolicyKind kind) {
  switch (kind) {
    case LocalPolicyKind::AlwaysOn: return "always_on";
    case LocalPolicyKind::AdHoc: return "ad_hoc";
    case LocalPolicyKind::FixedTimeout: return "fixed_timeout";
    case LocalPolicyKind::Rl: return "rl";
  }
  return "?";
}

void ExperimentConfig::validate() const {
  cluster.validate();
  layout().validate();
  if (trace.synthetic.resource_count != cluster.resources)
    throw ConfigError("trace resource count must match cluster.resources");
  if (trace.segments < 1) throw ConfigError("trace.segments must be >= 1");
  if (trace.eval_traces < 1) throw ConfigError("trace.eval_traces must be >= 1");
  if (trace.file.empty() && trace.synthetic.jobs == 0) throw ConfigError("trace.synthetic.jobs must be > 0");
  if (!trace.file.empty() && trace.eval_traces > trace.segments)
    throw ConfigError("trace.eval_traces must not exceed trace.segments");
  if (!(trace.duration_noise >= 0 && trace.duration_noise < 1))
    throw ConfigError("trace.duration_noise must be in [0, 1)");
  if (!(fixed_timeout_s >= 0) || !std::isfinite(fixed_timeout_s))
    throw ConfigError("policy.fixed_timeout_s must be finite and >= 0");
  if (metrics_cadence < 1) throw ConfigError("metrics.cadence must be >= 1");
  global.validate();
  local.validate();
}

Override parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + text + "' is not key=value");
  auto key = trim(std::string_view(text).substr(0, eq));
  if (key.empty()) throw ConfigError("override '" + text + "' has an empty key");
  return {key, trim(std::string_view(text).substr(eq + 1))};
}

void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value) {
  for (const auto& e : registry()) {
    if (key == e.key) {
      e.set(config, key, value);
      if (key == "cluster.resources") config.trace.synthetic.resource_count = config.cluster.resources;
      return;
    }
  }
  throw ConfigError("unknown configuration key '" + key + "'");
}

void apply_config_text(ExperimentConfig& config, std::istream& in) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", number);
    const auto key = trim(std::string_view(content).substr(0, eq));
    const auto value = trim(std::string_view(content).substr(eq + 1));
    try {
      apply_setting(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(number) + ": " + e.what());
    }
  }
}

ExperimentConfig load_config(const std::string& path, const std::vector<Override>& overrides) {
  ExperimentConfig config;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    try {
      apply_config_text(config, in);
    } catch (const ConfigError& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  for (const auto& [key, value] : overrides) apply_setting(config, key, value);
  config.validate();
  return config;
}

void write_config(std::ostream& out, const ExperimentConfig& config) {
  for (const auto& e : registry()) out << e.key << " = " << e.get(config) << '\n';
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& e : registry()) keys.emplace_back(e.key);
  return keys;
}

}  // namespace hrm
