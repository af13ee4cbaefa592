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
#include "hrm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <ostream>

#include "hrm/baselines.hpp"

namespace hrm {

std::uint64_t SeedStreams::derive(std::string_view name) const { return stream(name)(); }

SeedStreams seed_all(std::uint64_t seed) { return SeedStreams{seed}; }

TraceSet build_traces(const ExperimentConfig& config) {
  const SeedStreams seeds = seed_all(config.seed);
  const auto& tc = config.trace;
  TraceSet set;
  if (!tc.file.empty()) {
    ParseOptions opts;
    opts.filter_durations = tc.filter;
    opts.resource_count = config.cluster.resources;
    const auto parsed = load_trace(tc.file, opts);
    auto segments = split_segments(parsed.trace, tc.segments);
    if (segments.size() > tc.eval_traces) {
      const auto cut = segments.end() - static_cast<std::ptrdiff_t>(tc.eval_traces);
      set.train.assign(segments.begin(), cut);
      set.eval.assign(cut, segments.end());
    } else {
      set.train = segments;
      set.eval = segments;
    }
  } else {
    for (std::size_t i = 0; i < tc.eval_traces; ++i)
      set.eval.push_back(generate_synthetic(tc.synthetic, seeds.derive("trace.eval." + std::to_string(i))));
    for (std::size_t i = 0; i < tc.train_traces; ++i)
      set.train.push_back(generate_synthetic(tc.synthetic, seeds.derive("trace.train." + std::to_string(i))));
    if (set.train.empty()) set.train = set.eval;
  }
  if (tc.duration_noise > 0) {
    for (std::size_t i = 0; i < set.train.size(); ++i) {
      Rng rng = seeds.stream("trace.noise.train." + std::to_string(i));
      apply_duration_noise(set.train[i], tc.duration_noise, rng);
    }
    for (std::size_t i = 0; i < set.eval.size(); ++i) {
      Rng rng = seeds.stream("trace.noise.eval." + std::to_string(i));
      apply_duration_noise(set.eval[i], tc.duration_noise, rng);
    }
  }
  return set;
}

namespace {

std::unique_ptr<PowerController> baseline_power(const ExperimentConfig& config) {
  switch (config.local_policy) {
    case LocalPolicyKind::AlwaysOn: return always_on();
    case LocalPolicyKind::AdHoc: return ad_hoc_shutdown();
    case LocalPolicyKind::FixedTimeout: return fixed_timeout_policy(config.fixed_timeout_s);
    case LocalPolicyKind::Rl: return fixed_timeout_policy(config.local.bootstrap_timeout_s);
  }
  throw ConfigError("unknown local policy");
}

// Greedy allocator that neither stores transitions nor refits.
std::unique_ptr<DrlAllocator> frozen_allocator(const ExperimentConfig& config, GlobalLearner& learner,
                                               Rng rng) {
  auto alloc = std::make_unique<DrlAllocator>(config.global, learner, nullptr, std::move(rng));
  alloc->set_epsilon(config.global.eval_epsilon);
  return alloc;
}

void check_littles_law(const EpisodeResult& result) {
  const double latency = result.accounting.accumulated_latency;
  const double integral = result.accounting.total_jobs_integral();
  const double scale = std::max({1.0, std::abs(latency), std::abs(integral)});
  if (std::abs(latency - integral) > 1e-6 * scale)
    throw InvariantError("accumulated latency " + format_double(latency) +
                         " differs from the jobs-in-system integral " + format_double(integral));
}

}  // namespace

std::unique_ptr<GlobalLearner> train_global(const ExperimentConfig& config, const TraceSet& traces,
                                            OfflineReport* report) {
  if (traces.train.empty()) throw ConfigError("no training traces");
  const SeedStreams seeds = seed_all(config.seed);
  const auto& g = config.global;
  Rng init = seeds.stream("global.init");
  auto learner = std::make_unique<GlobalLearner>(config.layout(), g, init);
  ExperienceMemory memory(g.memory_capacity);
  Rng rng = seeds.stream("global.train");
  auto power = baseline_power(config);
  const TierContext ctx{config.cluster, power.get(), {}};
  const int total = std::max(1, std::max(0, g.offline_replays - 1) + g.online_episodes);
  OfflineReport offline;
  if (g.offline_replays > 0) offline = train_offline(*learner, memory, traces.train, ctx, rng, total);
  for (int e = 0; e < g.online_episodes; ++e) {
    const auto& trace = traces.train[static_cast<std::size_t>(g.offline_replays + e) % traces.train.size()];
    const int episode = std::max(0, g.offline_replays - 1) + e;
    run_online_episode(*learner, memory, trace, ctx,
                       annealed_epsilon(g.epsilon_start, g.epsilon_end, episode, total), rng);
  }
  if (report) *report = offline;
  return learner;
}

std::vector<std::vector<double>> record_arrival_streams(const ExperimentConfig& config,
                                                        const TraceSet& traces,
                                                        GlobalLearner* learner) {
  const SeedStreams seeds = seed_all(config.seed);
  auto bootstrap = fixed_timeout_policy(config.local.bootstrap_timeout_s);
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < traces.train.size(); ++i) {
    ArrivalStreamRecorder recorder(config.cluster.servers, bootstrap.get());
    if (learner) {
      auto alloc = frozen_allocator(config, *learner, seeds.stream("global.record." + std::to_string(i)));
      run_episode(config.cluster, traces.train[i], *alloc, &recorder, {alloc.get()});
    } else {
      RoundRobin rr;
      run_episode(config.cluster, traces.train[i], rr, &recorder);
    }
    for (const auto& s : recorder.streams()) out.push_back(s);
  }
  return out;
}

void fit_predictor(const ExperimentConfig& config, const std::vector<std::vector<double>>& streams,
                   TrainedModels& models) {
  const SeedStreams seeds = seed_all(config.seed);
  std::vector<double> all;
  for (const auto& s : streams) all.insert(all.end(), s.begin(), s.end());
  if (all.empty()) throw ConfigError("training traces produce no inter-arrival samples");
  models.categories = CategoryMap::from_quantiles(all, config.local.categories);
  Rng init = seeds.stream("local.predictor.init");
  models.predictor = std::make_shared<Predictor>(Predictor::create(init));
  const bool enough = std::any_of(streams.begin(), streams.end(), [](const auto& s) {
    return s.size() > static_cast<std::size_t>(Predictor::kLookBack);
  });
  if (!enough || config.local.predictor_steps == 0) return;
  PredictorTraining opts;
  opts.max_steps = config.local.predictor_steps;
  opts.batch_size = config.local.predictor_batch;
  opts.learning_rate = config.local.predictor_learning_rate;
  opts.scale_s = config.local.interarrival_scale_s;
  Rng rng = seeds.stream("local.predictor.train");
  models.predictor_report = train_predictor(*models.predictor, streams, opts, rng);
}

std::unique_ptr<LocalTier> train_local(const ExperimentConfig& config, const TraceSet& traces,
                                       GlobalLearner* learner, const CategoryMap& categories,
                                       std::shared_ptr<const Predictor> predictor) {
  const SeedStreams seeds = seed_all(config.seed);
  const auto& l = config.local;
  auto tier = std::make_unique<LocalTier>(config.cluster.servers, l, config.cluster.power, categories,
                                          std::move(predictor), seeds.derive("local.tier"));
  tier->set_learning(true);
  for (int e = 0; e < l.train_episodes; ++e) {
    const auto& trace = traces.train[static_cast<std::size_t>(e) % traces.train.size()];
    tier->reset_episode();
    tier->set_epsilon(annealed_epsilon(l.epsilon_start, l.epsilon_end, e, l.train_episodes));
    if (learner) {
      auto alloc = frozen_allocator(config, *learner, seeds.stream("global.local_train." + std::to_string(e)));
      run_episode(config.cluster, trace, *alloc, tier.get(), {alloc.get(), tier.get()});
    } else {
      RoundRobin rr;
      run_episode(config.cluster, trace, rr, tier.get(), {tier.get()});
    }
  }
  tier->reset_episode();
  return tier;
}

TrainedModels train_models(const ExperimentConfig& config, const TraceSet& traces) {
  config.validate();
  TrainedModels models;
  if (config.global_policy == GlobalPolicyKind::Drl)
    models.learner = train_global(config, traces, &models.offline);
  if (config.local_policy == LocalPolicyKind::Rl) {
    fit_predictor(config, record_arrival_streams(config, traces, models.learner.get()), models);
    models.local = train_local(config, traces, models.learner.get(), models.categories, models.predictor);
  }
  return models;
}

void save_models(const TrainedModels& models, const ExperimentConfig& config, const std::string& path) {
  (void)config;
  neural::Checkpoint ck;
  if (models.learner) models.learner->save(ck, "global");
  if (models.local) {
    const auto& b = models.categories.boundaries();
    Eigen::MatrixXd row(1, static_cast<Eigen::Index>(b.size()) + 1);
    row(0, 0) = static_cast<double>(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) row(0, static_cast<Eigen::Index>(i) + 1) = b[i];
    ck.add("local.categories", row);
    ck.add_store("local.predictor", *models.predictor->store());
    models.local->save(ck, "local");
  }
  ck.save(path);
}

TrainedModels load_models(const ExperimentConfig& config, const std::string& path) {
  const SeedStreams seeds = seed_all(config.seed);
  const auto ck = neural::Checkpoint::load(path);
  TrainedModels models;
  if (config.global_policy == GlobalPolicyKind::Drl) {
    if (!ck.contains("global.layout")) throw ConfigError(path + " holds no allocator network");
    Rng init = seeds.stream("global.init");
    models.learner = std::make_unique<GlobalLearner>(config.layout(), config.global, init);
    models.learner->load(ck, "global");
  }
  if (config.local_policy == LocalPolicyKind::Rl) {
    if (!ck.contains("local.categories")) throw ConfigError(path + " holds no power managers");
    const auto& row = ck.get("local.categories");
    std::vector<double> b;
    for (Eigen::Index i = 1; i < row.size(); ++i) b.push_back(row(0, i));
    models.categories = CategoryMap(std::move(b));
    Rng init = seeds.stream("local.predictor.init");
    models.predictor = std::make_shared<Predictor>(Predictor::create(init));
    ck.load_store("local.predictor", *models.predictor->store());
    models.local = std::make_unique<LocalTier>(config.cluster.servers, config.local, config.cluster.power,
                                               models.categories, models.predictor,
                                               seeds.derive("local.tier"));
    models.local->load(ck, "local");
  }
  return models;
}

TraceSummary summarize(const std::string& label, const EpisodeResult& result) {
  TraceSummary s;
  s.label = label;
  s.jobs = result.jobs.size();
  s.energy_kwh = result.energy_kwh();
  s.accumulated_latency_s = result.accounting.accumulated_latency;
  s.average_latency_s = result.average_latency_s();
  s.average_power_w = result.average_power_w();
  s.energy_per_job_j = result.energy_per_job_j();
  s.elapsed_s = result.elapsed_s;
  return s;
}

TraceSummary mean_summary(const std::string& label, std::span<const TraceSummary> rows) {
  TraceSummary m;
  m.label = label;
  if (rows.empty()) return m;
  const double n = static_cast<double>(rows.size());
  std::size_t jobs = 0;
  for (const auto& r : rows) {
    jobs += r.jobs;
    m.energy_kwh += r.energy_kwh / n;
    m.accumulated_latency_s += r.accumulated_latency_s / n;
    m.average_latency_s += r.average_latency_s / n;
    m.average_power_w += r.average_power_w / n;
    m.energy_per_job_j += r.energy_per_job_j / n;
    m.elapsed_s += r.elapsed_s / n;
  }
  m.jobs = jobs / rows.size();
  return m;
}

ExperimentResult evaluate(const ExperimentConfig& config, const TraceSet& traces, TrainedModels& models) {
  const SeedStreams seeds = seed_all(config.seed);
  const bool drl = config.global_policy == GlobalPolicyKind::Drl;
  const bool rl = config.local_policy == LocalPolicyKind::Rl;
  if (drl && !models.learner) throw ConfigError("drl allocation needs a trained network");
  if (rl && !models.local) throw ConfigError("rl power management needs trained managers");

  ExperimentResult out;
  out.name = config.name;
  EpisodeOptions opts;
  opts.metrics_cadence = config.metrics_cadence;
  opts.check_invariants = config.check_invariants;
  auto baseline = rl ? nullptr : baseline_power(config);
  if (rl) {
    models.local->enable_log(true);
    models.local->set_learning(true);
    models.local->set_epsilon(config.local.epsilon_end);
  }
  for (std::size_t i = 0; i < traces.eval.size(); ++i) {
    std::vector<ClusterObserver*> observers;
    PowerController* power = baseline.get();
    if (rl) {
      models.local->reset_episode();
      power = models.local.get();
      observers.push_back(models.local.get());
    }
    RoundRobin rr;
    std::unique_ptr<DrlAllocator> alloc;
    AllocationPolicy* policy = &rr;
    if (drl) {
      alloc = frozen_allocator(config, *models.learner, seeds.stream("global.eval." + std::to_string(i)));
      observers.push_back(alloc.get());
      policy = alloc.get();
    }
    const EpisodeResult result = run_episode(config.cluster, traces.eval[i], *policy, power, observers, opts);
    check_littles_law(result);
    out.metrics.push_back(result.rows);
    out.per_trace.push_back(summarize("trace" + std::to_string(i + 1), result));
  }
  out.mean = mean_summary("mean", out.per_trace);
  if (rl) {
    out.decisions = models.local->log();
    models.local->enable_log(false);
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const TraceSet traces = build_traces(config);
  TrainedModels models = config.models_checkpoint.empty() ? train_models(config, traces)
                                                          : load_models(config, config.models_checkpoint);
  return evaluate(config, traces, models);
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << "jobs_completed,elapsed_s,energy_kwh,accumulated_latency_s,average_power_w\n";
  for (const auto& r : rows)
    out << r.jobs_completed << ',' << format_double(r.elapsed_s) << ',' << format_double(r.energy_kwh) << ','
        << format_double(r.accumulated_latency_s) << ',' << format_double(r.average_power_w) << '\n';
}

namespace {

void write_summary_row(std::ostream& out, const TraceSummary& s) {
  out << s.label << ',' << s.jobs << ',' << format_double(s.energy_kwh) << ','
      << format_double(s.accumulated_latency_s) << ',' << format_double(s.average_latency_s) << ','
      << format_double(s.average_power_w) << ',' << format_double(s.energy_per_job_j) << ','
      << format_double(s.elapsed_s) << '\n';
}

constexpr const char* kSummaryHeader =
    "jobs,energy_kwh,accumulated_latency_s,average_latency_s,average_power_w,energy_per_job_j,elapsed_s\n";

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  body(out);
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

void write_summary_csv(std::ostream& out, const ExperimentResult& result) {
  out << "trace," << kSummaryHeader;
  for (const auto& s : result.per_trace) write_summary_row(out, s);
  write_summary_row(out, result.mean);
}

void write_experiment(const ExperimentResult& result, const ExperimentConfig& config, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);
  for (std::size_t i = 0; i < result.metrics.size(); ++i) {
    const std::string name =
        result.metrics.size() == 1 ? "metrics.csv" : "metrics_" + std::to_string(i + 1) + ".csv";
    write_file(root / name, [&](std::ostream& o) { write_metrics_csv(o, result.metrics[i]); });
  }
  write_file(root / "summary.csv", [&](std::ostream& o) { write_summary_csv(o, result); });
  if (config.local_policy == LocalPolicyKind::Rl)
    write_file(root / "decisions.csv", [&](std::ostream& o) { write_decision_log(o, result.decisions); });
  write_file(root / "config.txt", [&](std::ostream& o) { write_config(o, config); });
}

double savings(double a, double b) { return a == 0.0 ? 0.0 : (a - b) / a; }

Comparison compare_results(const std::vector<ExperimentResult>& results) {
  Comparison c;
  for (const auto& r : results) {
    TraceSummary m = r.mean;
    m.label = r.name;
    c.arms.push_back(m);
  }
  for (const auto& a : c.arms)
    for (const auto& b : c.arms) {
      if (&a == &b) continue;
      c.pairs.push_back({a.label, b.label, savings(a.energy_kwh, b.energy_kwh),
                         savings(a.average_latency_s, b.average_latency_s)});
    }
  return c;
}

Comparison compare_policies(const std::vector<ExperimentConfig>& configs) {
  for (const auto& c : configs) c.validate();
  std::vector<ExperimentResult> results;
  for (const auto& c : configs) results.push_back(run_experiment(c));
  return compare_results(results);
}

void write_comparison(std::ostream& out, const Comparison& comparison) {
  out << "arm," << kSummaryHeader;
  for (const auto& a : comparison.arms) write_summary_row(out, a);
  out << "\nfrom,to,energy_savings_pct,latency_savings_pct\n";
  for (const auto& p : comparison.pairs)
    out << p.from << ',' << p.to << ',' << format_double(100.0 * p.energy) << ','
        << format_double(100.0 * p.latency) << '\n';
}

SweepResult sweep_tradeoff(const ExperimentConfig& base, const std::vector<double>& ws,
                           const std::vector<double>& fixed_timeouts) {
  if (ws.empty()) throw ConfigError("the sweep needs at least one w");
  ExperimentConfig cfg = base;
  cfg.global_policy = GlobalPolicyKind::Drl;
  cfg.local_policy = LocalPolicyKind::Rl;
  cfg.validate();
  for (double w : ws) {
    ExperimentConfig c = cfg;
    c.local.w = w;
    c.local.validate();
  }
  const TraceSet traces = build_traces(cfg);
  TrainedModels models;
  models.learner = train_global(cfg, traces, &models.offline);
  fit_predictor(cfg, record_arrival_streams(cfg, traces, models.learner.get()), models);

  SweepResult out;
  auto point = [](double x, const ExperimentResult& r) {
    return SweepPoint{x, r.mean.average_latency_s, r.mean.energy_per_job_j, r.mean.average_power_w};
  };
  for (double w : ws) {
    ExperimentConfig c = cfg;
    c.local.w = w;
    models.local = train_local(c, traces, models.learner.get(), models.categories, models.predictor);
    out.points.push_back(point(w, evaluate(c, traces, models)));
  }
  for (double t : fixed_timeouts) {
    ExperimentConfig c = cfg;
    c.local_policy = LocalPolicyKind::FixedTimeout;
    c.fixed_timeout_s = t;
    out.fixed.push_back(point(t, evaluate(c, traces, models)));
  }
  std::vector<double> w, power, latency, energy;
  for (const auto& p : out.points) {
    w.push_back(p.w);
    power.push_back(p.average_power_w);
    latency.push_back(p.avg_latency_s);
    energy.push_back(p.avg_energy_j_per_job);
  }
  out.rho_power = spearman(w, power);
  out.rho_latency = spearman(w, latency);
  out.rho_energy = spearman(w, energy);
  for (const auto& p : out.points)
    for (const auto& f : out.fixed)
      if (p.avg_energy_j_per_job <= f.avg_energy_j_per_job && p.avg_latency_s <= f.avg_latency_s)
        out.dominates_fixed = true;
  return out;
}

void write_frontier_csv(std::ostream& out, const std::vector<SweepPoint>& points) {
  out << "w,avg_latency_s,avg_energy_j_per_job\n";
  for (const auto& p : points)
    out << format_double(p.w) << ',' << format_double(p.avg_latency_s) << ','
        << format_double(p.avg_energy_j_per_job) << '\n';
}

void write_fixed_arms_csv(std::ostream& out, const std::vector<SweepPoint>& points) {
  out << "timeout_s,avg_latency_s,avg_energy_j_per_job\n";
  for (const auto& p : points)
    out << format_double(p.w) << ',' << format_double(p.avg_latency_s) << ','
        << format_double(p.avg_energy_j_per_job) << '\n';
}

namespace {

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("spearman needs equal-length samples");
  if (x.size() < 2) return 0.0;
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace hrm
