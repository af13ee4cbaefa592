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
// Experiment orchestration: trace preparation, the training pipeline for the
// learned tiers, evaluation runs, policy comparisons and the w sweep.

#ifndef HRM_HARNESS_HPP
#define HRM_HARNESS_HPP

#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hrm/config.hpp"
#include "hrm/episode.hpp"
#include "hrm/global_tier.hpp"
#include "hrm/local_tier.hpp"

namespace hrm {

/// Named substreams of the master seed.
struct SeedStreams {
  std::uint64_t master = 0;
  Rng stream(std::string_view name) const { return make_stream(master, name); }
  std::uint64_t derive(std::string_view name) const;
};

SeedStreams seed_all(std::uint64_t seed);

struct TraceSet {
  std::vector<Trace> train;
  std::vector<Trace> eval;
};

/// Synthetic: eval_traces and train_traces independent realizations. File:
/// the trace is split into segments; the last eval_traces are evaluated and
/// the others are used for training (all of them if none are left).
TraceSet build_traces(const ExperimentConfig& config);

struct TrainedModels {
  std::unique_ptr<GlobalLearner> learner;  // drl allocation only
  CategoryMap categories;                  // rl power management only
  std::shared_ptr<Predictor> predictor;
  std::unique_ptr<LocalTier> local;
  OfflineReport offline;
  PredictorReport predictor_report;
};

/// Global tier: offline replays and online episodes under the training power
/// controller (the configured baseline, or the bootstrap timeout when the
/// local tier learns).
std::unique_ptr<GlobalLearner> train_global(const ExperimentConfig& config, const TraceSet& traces,
                                            OfflineReport* report = nullptr);

/// Per-server inter-arrival streams of the training traces under the given
/// allocator (round robin when learner is null).
std::vector<std::vector<double>> record_arrival_streams(const ExperimentConfig& config,
                                                        const TraceSet& traces,
                                                        GlobalLearner* learner);

/// Category boundaries and the LSTM predictor fitted to the streams.
void fit_predictor(const ExperimentConfig& config, const std::vector<std::vector<double>>& streams,
                   TrainedModels& models);

/// Local Q tables learned over local.train_episodes training episodes with
/// the allocator frozen.
std::unique_ptr<LocalTier> train_local(const ExperimentConfig& config, const TraceSet& traces,
                                       GlobalLearner* learner, const CategoryMap& categories,
                                       std::shared_ptr<const Predictor> predictor);

TrainedModels train_models(const ExperimentConfig& config, const TraceSet& traces);

void save_models(const TrainedModels& models, const ExperimentConfig& config, const std::string& path);
TrainedModels load_models(const ExperimentConfig& config, const std::string& path);

struct TraceSummary {
  std::string label;
  std::size_t jobs = 0;
  double energy_kwh = 0.0;
  double accumulated_latency_s = 0.0;
  double average_latency_s = 0.0;
  double average_power_w = 0.0;
  double energy_per_job_j = 0.0;
  double elapsed_s = 0.0;
};

TraceSummary summarize(const std::string& label, const EpisodeResult& result);
/// Field-wise mean.
TraceSummary mean_summary(const std::string& label, std::span<const TraceSummary> rows);

struct ExperimentResult {
  std::string name;
  std::vector<std::vector<MetricsRow>> metrics;  // per evaluated trace
  std::vector<TraceSummary> per_trace;
  TraceSummary mean;
  std::vector<DecisionLogEntry> decisions;
};

/// Evaluates the configured policy pair on every evaluation trace.
ExperimentResult evaluate(const ExperimentConfig& config, const TraceSet& traces, TrainedModels& models);

/// build_traces, then train (or load models.checkpoint), then evaluate.
ExperimentResult run_experiment(const ExperimentConfig& config);

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
void write_summary_csv(std::ostream& out, const ExperimentResult& result);
/// metrics.csv (or metrics_<i>.csv per trace), summary.csv, decisions.csv,
/// config.txt.
void write_experiment(const ExperimentResult& result, const ExperimentConfig& config,
                      const std::string& dir);

/// (a - b) / a; zero when a is zero.
double savings(double a, double b);

struct PairSavings {
  std::string from, to;
  double energy = 0.0;   // (E_from - E_to) / E_from
  double latency = 0.0;  // same for average latency
};

struct Comparison {
  std::vector<TraceSummary> arms;  // mean row of each arm
  std::vector<PairSavings> pairs;  // every ordered pair of distinct arms
};

Comparison compare_results(const std::vector<ExperimentResult>& results);
Comparison compare_policies(const std::vector<ExperimentConfig>& configs);
void write_comparison(std::ostream& out, const Comparison& comparison);

struct SweepPoint {
  double w = 0.0;  // or the timeout of a fixed arm
  double avg_latency_s = 0.0;
  double avg_energy_j_per_job = 0.0;
  double average_power_w = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::vector<SweepPoint> fixed;  // w holds the timeout in seconds
  double rho_power = 0.0;
  double rho_latency = 0.0;
  double rho_energy = 0.0;
  /// Some sweep point has no more energy and no more latency than some
  /// fixed arm.
  bool dominates_fixed = false;
};

/// Trains the allocator and predictor once, then per w trains fresh local
/// tables and evaluates; the fixed-timeout arms share the allocator.
SweepResult sweep_tradeoff(const ExperimentConfig& base, const std::vector<double>& ws,
                           const std::vector<double>& fixed_timeouts = {30.0, 60.0, 90.0});

/// Header w,avg_latency_s,avg_energy_j_per_job.
void write_frontier_csv(std::ostream& out, const std::vector<SweepPoint>& points);
void write_fixed_arms_csv(std::ostream& out, const std::vector<SweepPoint>& points);

/// Spearman rank correlation with average ranks for ties; 0 when either side
/// is constant.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace hrm

#endif  // HRM_HARNESS_HPP
