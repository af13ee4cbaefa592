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

// Acceptance checks: one PASS or FAIL line per criterion, exit status 1 if any
// fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "hrm/baselines.hpp"
#include "hrm/harness.hpp"
#include "hrm/neural/autoencoder.hpp"
#include "hrm/neural/lstm.hpp"
#include "test_support.hpp"

using namespace hrm;
using Vec = neural::Vector<double>;

namespace {

const std::string kConfigDir = HRM_CONFIG_DIR;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < limit_s;
  const bool pass = out.pass && in_time;
  if (!pass) ++failures;
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << " " << name << ": " << out.detail
            << " [" << format_double(std::round(secs * 100) / 100) << " s of " << limit_s << " s"
            << (in_time ? "" : ", over time") << "]" << std::endl;
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

double quadrature(const std::vector<RateSegment>& segs, double beta) {
  double total = 0, t0 = 0;
  for (const auto& s : segs) {
    const auto n = static_cast<long>(std::ceil(s.duration / 1e-3));
    const double h = n > 0 ? s.duration / double(n) : 0.0;
    for (long k = 0; k < n; ++k) total += s.rate * std::exp(-beta * (t0 + (double(k) + 0.5) * h)) * h;
    t0 += s.duration;
  }
  return total;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome power_model() {
  double worst = 0;
  for (double x : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const double expected = 87.0 + 58.0 * (2.0 * x - std::pow(x, 1.4));
    worst = std::max(worst, std::abs(power_draw(ServerMode::active(), x) - expected));
  }
  const bool ends = power_draw(ServerMode::active(), 0.0) == 87.0 && power_draw(ServerMode::active(), 1.0) == 145.0;
  return {worst <= 1e-9 && ends, "max error " + fmt(worst) + ", endpoints " + (ends ? "exact" : "wrong")};
}

Outcome smdp_arithmetic() {
  const double r = discounted_segment(0.0, 2.0, 10.0, 0.5);
  const double exact = 0.1 * 10.0 * (1.0 - std::exp(-1.0)) / 0.5;
  const std::vector<double> zero{0.0};
  const double via_target = tabular_update(0.0, smdp_target(r, 2.0, zero, 0.5), 0.1);
  DpmQTable table(1, {0.0});
  dpm_update(table, 0, 0, r, 2.0, 0, 0.1, 0.5);
  const double e1 = std::max(std::abs(via_target - exact), std::abs(table.at(0, 0) - exact));
  const bool literal = std::abs(via_target - 1.2642411) < 5e-8;

  Rng rng(2026);
  std::uniform_int_distribution<int> count(1, 6);
  std::uniform_real_distribution<double> dur(0.0, 3.0), rate(-200.0, 0.0), beta(0.1, 1.0);
  double worst = 0;
  for (int k = 0; k < 100; ++k) {
    std::vector<RateSegment> segs(static_cast<std::size_t>(count(rng)));
    for (auto& s : segs) s = {dur(rng), rate(rng)};
    const double b = beta(rng);
    DiscountedAccumulator acc(b, 1.0);
    acc.start(0.0);
    double t = 0;
    for (const auto& s : segs) {
      acc.add(t, s.duration, s.rate);
      t += s.duration;
    }
    const double oracle = quadrature(segs, b);
    worst = std::max({worst, std::abs(acc.value() - oracle) / std::abs(oracle),
                      std::abs(accumulate_discounted_reward(segs, b) - oracle) / std::abs(oracle)});
  }
  return {e1 <= 1e-9 && literal && worst <= 1e-6,
          "dQ " + format_double(via_target) + " (error " + fmt(e1) + "), quadrature max rel error " + fmt(worst)};
}

Outcome gradients() {
  Rng rng(7);
  std::uniform_int_distribution<int> size(2, 7), steps(1, 8), hid(1, 5);
  double dense = 0, ae = 0, lstm = 0;
  for (int draw = 0; draw < 100; ++draw) {
    const int a = size(rng), b = size(rng), c = size(rng);
    auto store = std::make_shared<neural::ParamStore<double>>();
    auto net = neural::DenseStack<double>::create(
        {{a, b, neural::Activation::Elu}, {b, c, neural::Activation::Linear}}, store, "n", rng);
    const Vec x = 0.1 * testing::random_vector(a, rng);
    const Vec w = testing::random_vector(c, rng);
    neural::DenseCache<double> cache;
    net.forward(x, &cache);
    auto g = store->zeros_like();
    net.backward(cache, w, g);
    dense = std::max(dense, testing::max_fd_error(*store, g, [&] { return w.dot(net.forward(x)); }));
  }
  for (int draw = 0; draw < 100; ++draw) {
    auto m = neural::Autoencoder<double>::create(size(rng), rng, size(rng), size(rng));
    const Vec x = 0.5 * testing::random_vector(m.input_size(), rng);
    auto g = m.store()->zeros_like();
    m.loss_and_gradient(x, g);
    ae = std::max(ae, testing::max_fd_error(*m.store(), g, [&] { return 0.5 * (m.reconstruct(x) - x).squaredNorm(); }));
  }
  for (int draw = 0; draw < 100; ++draw) {
    auto m = neural::LstmRegressor<double>::create(rng, hid(rng), steps(rng));
    const Vec seq = testing::random_vector(m.look_back(), rng);
    const double target = testing::random_vector(1, rng)(0);
    std::span<const double> s(seq.data(), static_cast<std::size_t>(seq.size()));
    auto g = m.store()->zeros_like();
    m.loss_and_gradient(s, target, g);
    lstm = std::max(lstm, testing::max_fd_error(*m.store(), g, [&] {
      const double y = m.forward(s);
      return 0.5 * (y - target) * (y - target);
    }));
  }
  return {std::max({dense, ae, lstm}) <= 1e-4,
          "max rel error dense " + fmt(dense) + ", autoencoder " + fmt(ae) + ", lstm " + fmt(lstm)};
}

Outcome weight_sharing() {
  Rng rng(11);
  GroupLayout L{10, 3, 2};
  auto net = GlobalQNetwork<double>::create(L, rng);
  Vec s = testing::random_vector(L.state_size(), rng).cwiseAbs();
  s.segment(L.block_size(), L.block_size()) = s.segment(0, L.block_size());
  const Vec q = net.q_values(s);
  bool mirrored = true;
  for (int i = 0; i < L.group_size(); ++i) mirrored = mirrored && q(i) == q(i + L.group_size());

  auto sub0 = net.logical_subq(0);
  auto sub1 = net.logical_subq(1);
  auto enc0 = net.logical_encoder(0);
  auto enc1 = net.logical_encoder(1);
  sub0.weights(0)(3, 4) += 0.25;
  enc1.bias(0)(2) -= 0.5;
  const bool shared = sub1.weights(0)(3, 4) == sub0.weights(0)(3, 4) && enc0.bias(0)(2) == enc1.bias(0)(2);
  const Vec q2 = net.q_values(s);
  bool still = true;
  for (int i = 0; i < L.group_size(); ++i) still = still && q2(i) == q2(i + L.group_size());
  return {mirrored && shared && still && q2 != q,
          std::string("mirrored blocks ") + (mirrored && still ? "identical" : "differ") +
              ", update through one view " + (shared ? "seen" : "not seen") + " through the other"};
}

Outcome simulation_invariants() {
  WorkloadSpec spec;
  spec.rate = 0.05;
  spec.jobs = 5000;
  spec.duration_max_s = 1800;
  const Trace t = generate_synthetic(spec, 5);
  ClusterConfig cfg;
  cfg.servers = 10;
  EpisodeOptions opts;
  opts.check_invariants = true;
  std::string detail;
  bool ok = true;
  for (int arm = 0; arm < 2; ++arm) {
    RoundRobin rr;
    auto power = arm == 0 ? ad_hoc_shutdown() : fixed_timeout_policy(60.0);
    const auto r = run_episode(cfg, t, rr, power.get(), {}, opts);
    const double integral = r.accounting.total_jobs_integral();
    const double rel = std::abs(r.accounting.accumulated_latency - integral) / integral;
    std::map<int, std::vector<const JobRecord*>> per;
    for (const auto& j : r.jobs) per[j.server].push_back(&j);
    bool fcfs = true;
    for (auto& [id, jobs] : per) {
      std::sort(jobs.begin(), jobs.end(), [](auto* a, auto* b) { return a->queue_order < b->queue_order; });
      for (std::size_t i = 1; i < jobs.size(); ++i) fcfs = fcfs && jobs[i]->start >= jobs[i - 1]->start;
    }
    ok = ok && rel <= 1e-6 && fcfs && r.accounting.completed.size() == t.size();
    detail += std::string(arm == 0 ? "ad hoc" : "timeout 60") + ": Little rel error " + fmt(rel) +
              (fcfs ? ", FCFS ok; " : ", FCFS broken; ");
  }
  Trace three;
  three.resource_count = 1;
  three.jobs = {{1, 0, 10, {0.5}, 10}, {2, 2, 12, {0.4}, 12}, {3, 4, 9, {0.4}, 9}};
  ClusterConfig one;
  one.servers = 1;
  one.resources = 1;
  RoundRobin rr;
  const auto r = run_episode(one, three, rr, nullptr);
  std::map<std::int64_t, double> lat;
  for (const auto& j : r.jobs) lat[j.id] = j.latency();
  const bool fig = lat[1] == 10.0 && lat[2] == 12.0 && lat[3] == 15.0;
  ok = ok && fig;
  detail += "three-job latencies " + format_double(lat[1]) + "/" + format_double(lat[2]) + "/" + format_double(lat[3]);
  return {ok, detail};
}

Outcome determinism() {
  const auto cfg = load_config(kConfigDir + "/drl_only.conf");
  const auto base = std::filesystem::temp_directory_path() / "hrm_acceptance_det";
  std::filesystem::remove_all(base);
  for (const char* run : {"a", "b"}) write_experiment(run_experiment(cfg), cfg, (base / run).string());
  const std::string a = slurp(base / "a" / "metrics.csv"), b = slurp(base / "b" / "metrics.csv");
  const std::string sa = slurp(base / "a" / "summary.csv"), sb = slurp(base / "b" / "summary.csv");
  std::filesystem::remove_all(base);
  return {!a.empty() && a == b && sa == sb,
          "drl-only config, metrics.csv " + std::to_string(a.size()) + " bytes, " +
              (a == b ? "identical" : "different")};
}

Outcome predictor_quality() {
  // Inter-arrivals of a periodic arrival process: a twelve-step cycle.
  auto stream = [](std::size_t n, double phase) {
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k)
      out[k] = 60.0 + 30.0 * std::sin(2.0 * std::numbers::pi * (double(k) + phase) / 12.0);
    return out;
  };
  const std::vector<std::vector<double>> train{stream(600, 0.0)};
  const std::vector<double> test = stream(300, 0.37);
  const int n = 10;
  const auto cats = CategoryMap::from_quantiles(train[0], n);
  Rng rng(3);
  auto model = Predictor::create(rng);
  PredictorTraining opts;
  opts.max_steps = 2000;
  opts.learning_rate = 3e-3;
  opts.scale_s = 300.0;
  const auto report = train_predictor(model, train, opts, rng);
  const std::size_t L = InterArrivalWindow::kCapacity;
  int hits = 0, total = 0;
  for (std::size_t i = L; i < test.size(); ++i) {
    const double y = predict_interarrival(model, std::span<const double>(test.data() + i - L, L), 300.0);
    hits += cats.category(y) == cats.category(test[i]);
    ++total;
  }
  const double acc = double(hits) / total;
  return {acc >= 3.0 / cats.count() && report.steps <= 2000,
          "accuracy " + fmt(acc) + " over " + std::to_string(cats.count()) + " categories (need " +
              fmt(3.0 / cats.count()) + "), " + std::to_string(report.steps) + " Adam steps"};
}

Outcome table_ordering() {
  std::vector<ExperimentConfig> arms;
  for (const char* f : {"round_robin.conf", "drl_only.conf", "hierarchical.conf"})
    arms.push_back(load_config(kConfigDir + "/" + f));
  const auto cmp = compare_policies(arms);
  const auto& rr = cmp.arms[0];
  const auto& drl = cmp.arms[1];
  const auto& hi = cmp.arms[2];
  const double save = savings(rr.energy_kwh, hi.energy_kwh);
  const double ratio = hi.average_latency_s / rr.average_latency_s;
  const bool order = hi.energy_kwh < drl.energy_kwh && drl.energy_kwh < rr.energy_kwh;
  return {order && save >= 0.30 && ratio <= 1.5,
          "energy kWh hierarchical " + fmt(hi.energy_kwh) + " < drl-only " + fmt(drl.energy_kwh) +
              " < round-robin " + fmt(rr.energy_kwh) + (order ? "" : " (violated)") + ", savings " +
              fmt(100 * save) + "%, latency ratio " + fmt(ratio)};
}

Outcome tradeoff_frontier() {
  const auto cfg = load_config(kConfigDir + "/frontier.conf");
  std::vector<double> ws;
  for (int k = 1; k <= 9; ++k) ws.push_back(k / 10.0);
  const auto r = sweep_tradeoff(cfg, ws);
  std::string pts;
  for (const auto& p : r.points)
    pts += " w=" + format_double(p.w) + ":" + fmt(p.avg_energy_j_per_job) + "J/" + fmt(p.avg_latency_s) + "s";
  std::string fixed;
  for (const auto& p : r.fixed)
    fixed += " " + format_double(p.w) + "s:" + fmt(p.avg_energy_j_per_job) + "J/" + fmt(p.avg_latency_s) + "s";
  return {r.rho_power <= -0.8 && r.rho_latency >= 0.8 && r.dominates_fixed,
          "rho_power " + fmt(r.rho_power) + ", rho_latency " + fmt(r.rho_latency) + ", dominates fixed " +
              (r.dominates_fixed ? "yes" : "no") + ";" + pts + "; fixed" + fixed};
}

}  // namespace

int main() {
  criterion(1, "power model", 1, power_model);
  criterion(2, "SMDP arithmetic", 10, smdp_arithmetic);
  criterion(3, "gradients", 120, gradients);
  criterion(4, "weight sharing", 1, weight_sharing);
  criterion(5, "simulation invariants", 30, simulation_invariants);
  criterion(6, "determinism", 60, determinism);
  criterion(7, "predictor quality", 300, predictor_quality);
  criterion(8, "energy ordering", 1800, table_ordering);
  criterion(9, "trade-off frontier", 2700, tradeoff_frontier);
  return failures == 0 ? 0 : 1;
}
