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
#include <numbers>
#include <sstream>

#include "hrm/baselines.hpp"
#include "hrm/episode.hpp"
#include "hrm/local_tier.hpp"

using namespace hrm;

namespace {

Server idle_server() {
  Server s;
  s.id = 1;
  s.mode = ServerMode::active();
  s.utilization = {0.0, 0.0, 0.0};
  return s;
}

std::vector<double> sine_stream(std::size_t n, double phase) {
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k)
    out[k] = 60.0 + 30.0 * std::sin(2.0 * std::numbers::pi * (double(k) + phase) / 12.0);
  return out;
}

}  // namespace

TEST_CASE("local reward rate") {
  CHECK(local_reward_rate_value(87.0, 0, 1.0) == -87.0);
  CHECK(local_reward_rate_value(123.0, 3, 0.0) == -3.0);
  CHECK(local_reward_rate_value(87.0, 2, 0.5, 100.0) == doctest::Approx(-0.5 * 0.87 - 1.0));
  const PowerModel pm;
  CHECK(local_reward_rate(idle_server(), pm, 1.0) == -87.0);
  Server asleep = idle_server();
  asleep.mode = ServerMode::sleep();
  for (double w : {0.0, 0.3, 1.0}) CHECK(local_reward_rate(asleep, pm, w) == 0.0);
}

TEST_CASE("inter-arrival window") {
  InterArrivalWindow w;
  CHECK(w.size() == 0);
  w.observe_arrival(5.0);
  CHECK(w.size() == 0);
  w.observe_arrival(15.0);
  w.observe_arrival(18.0);
  CHECK(w.values() == std::vector<double>{10.0, 3.0});
  CHECK(w.mean() == 6.5);
  for (int k = 0; k < 40; ++k) w.push(double(k));
  CHECK(w.full());
  const auto v = w.values();
  CHECK(v.size() == InterArrivalWindow::kCapacity);
  CHECK(v.front() == 5.0);
  CHECK(v.back() == 39.0);
}

TEST_CASE("category map") {
  const CategoryMap m({10.0, 20.0, 40.0});
  CHECK(m.count() == 4);
  CHECK(m.category(1.0) == 0);
  CHECK(m.category(10.0) == 1);
  CHECK(m.category(25.0) == 2);
  CHECK(m.category(1e9) == 3);
  std::vector<double> samples;
  for (int i = 1; i <= 100; ++i) samples.push_back(double(i));
  const auto q = CategoryMap::from_quantiles(samples, 4);
  CHECK(q.boundaries() == std::vector<double>{26.0, 51.0, 76.0});
  const std::vector<double> same(50, 7.0);
  CHECK(CategoryMap::from_quantiles(same, 10).count() == 2);
}

TEST_CASE("predict_category fallbacks") {
  const CategoryMap m({10.0, 20.0});
  InterArrivalWindow w;
  CHECK(predict_category(nullptr, w, m, 300.0) == 2);
  w.push(5.0);
  w.push(9.0);
  CHECK(predict_category(nullptr, w, m, 300.0) == 0);
  Rng rng(1);
  auto model = Predictor::create(rng);
  for (std::size_t i = 0; i < model.store()->size(); ++i) (*model.store())[i].setZero();
  for (std::size_t k = 0; k < InterArrivalWindow::kCapacity; ++k) w.push(15.0);
  const int first = predict_category(&model, w, m, 300.0);
  CHECK(first == 0);  // zero model predicts 0 s
  CHECK(predict_category(&model, w, m, 300.0) == first);
}

TEST_CASE("dpm_decide") {
  DpmQTable t(1, {0.0, 10.0, 30.0, 60.0});
  t.at(0, 2) = 5.0;
  Rng rng(3);
  CHECK(t.timeout(dpm_decide(t, 0, 0.0, rng)) == 30.0);
  DpmQTable flat(1, {0.0, 10.0});
  CHECK(flat.argmax(0) == 0);
  // chi-square at 1% with 3 degrees of freedom: 11.345.
  std::vector<int> counts(4, 0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(dpm_decide(t, 0, 1.0, rng))];
  double chi2 = 0;
  for (int c : counts) chi2 += (c - n / 4.0) * (c - n / 4.0) / (n / 4.0);
  CHECK(chi2 < 11.345);
}

TEST_CASE("predictor fits a constant stream") {
  Rng rng(4);
  auto model = Predictor::create(rng);
  const std::vector<std::vector<double>> streams{std::vector<double>(400, 10.0)};
  PredictorTraining opts;
  opts.max_steps = 1500;
  const auto report = train_predictor(model, streams, opts, rng);
  CHECK(report.mse.back() < report.mse.front());
  CHECK(predictor_mse(model, streams, 300.0) < 1.0);
  const CategoryMap m({5.0, 15.0, 30.0});
  InterArrivalWindow w;
  int hits = 0;
  for (int k = 0; k < 100; ++k) {
    w.push(10.0);
    if (w.full()) hits += predict_category(&model, w, m, 300.0) == 1;
  }
  const int windows = 100 - int(InterArrivalWindow::kCapacity) + 1;
  CHECK(hits >= 0.95 * windows);
}

TEST_CASE("predictor fits a sine-plus-offset stream") {
  Rng rng(5);
  auto model = Predictor::create(rng);
  const std::vector<std::vector<double>> train{sine_stream(600, 0.0)};
  const std::vector<std::vector<double>> test{sine_stream(200, 5.0)};
  PredictorTraining opts;
  opts.max_steps = 2000;
  opts.learning_rate = 3e-3;
  train_predictor(model, train, opts, rng);
  const double variance = 30.0 * 30.0 / 2.0;
  CHECK(predictor_mse(model, test, 300.0) < 0.1 * variance);
}

TEST_CASE("predictor training is deterministic under a seed") {
  const std::vector<std::vector<double>> streams{sine_stream(120, 0.0)};
  PredictorTraining opts;
  opts.max_steps = 30;
  Rng a(6), b(6);
  auto ma = Predictor::create(a);
  auto mb = Predictor::create(b);
  const auto ra = train_predictor(ma, streams, opts, a);
  const auto rb = train_predictor(mb, streams, opts, b);
  CHECK(ra.mse == rb.mse);
  CHECK_THROWS_AS(train_predictor(ma, {std::vector<double>(5, 1.0)}, opts, a), DomainError);
}

TEST_CASE("timeout 0 shuts the server down at once") {
  LocalConfig cfg;
  cfg.timeouts = {0.0, 60.0};
  const CategoryMap cats({100.0});
  LocalTier tier(1, cfg, PowerModel{}, cats, nullptr, 1);
  for (int s = 0; s < 2; ++s) tier.manager(1).qtable().at(s, 0) = 1.0;
  tier.set_epsilon(0.0);
  tier.set_learning(false);
  ClusterConfig cc;
  cc.servers = 1;
  Cluster c(cc);
  c.set_power_controller(&tier);
  c.add_observer(&tier);
  // The idle server decides at time 0 too: down until 30, up again at 60.
  c.assign_job({1, 0.0, 50.0, {0.5, 0.5, 0.5}, 50.0}, 1, 0.0);
  c.advance(60.0);
  CHECK(c.server(1).mode.kind == ModeKind::Active);
  c.advance(110.0);
  CHECK(c.server(1).mode.kind == ModeKind::ShuttingDown);
  CHECK(c.server(1).mode.transition_end == 140.0);
}

TEST_CASE("local Q-learning with w = 1 on a sparse trace prefers timeout 0") {
  WorkloadSpec spec;
  spec.rate = 1.0 / 1500.0;
  spec.jobs = 300;
  spec.duration = DurationDistribution::Uniform;
  spec.duration_min_s = 60;
  spec.duration_max_s = 120;
  const Trace t = generate_synthetic(spec, 12);
  LocalConfig cfg;
  cfg.w = 1.0;
  cfg.power_unit_w = 100.0;
  const CategoryMap cats{std::vector<double>{}};  // one state
  LocalTier tier(1, cfg, PowerModel{}, cats, nullptr, 2);
  ClusterConfig cc;
  cc.servers = 1;
  for (int ep = 0; ep < 5; ++ep) {
    tier.set_epsilon(0.3);
    tier.reset_episode();
    RoundRobin rr;
    run_episode(cc, t, rr, &tier, {&tier});
  }
  const auto& q = tier.manager(1).qtable();
  CHECK(tier.manager(1).updates() > 1000);
  CHECK(q.argmax(0) == 0);
  for (int a = 1; a < q.actions(); ++a) CHECK(q.at(0, a) < q.at(0, 0));
}

TEST_CASE("local tier checkpoint round trip") {
  LocalConfig cfg;
  const CategoryMap cats({5.0, 50.0});
  LocalTier a(3, cfg, PowerModel{}, cats, nullptr, 1);
  a.manager(2).qtable().at(1, 3) = -4.25;
  neural::Checkpoint ck;
  a.save(ck, "local");
  std::stringstream buf;
  ck.write(buf);
  LocalTier b(3, cfg, PowerModel{}, cats, nullptr, 9);
  b.load(neural::Checkpoint::read(buf), "local");
  for (int id = 1; id <= 3; ++id) CHECK(a.manager(id).qtable().values() == b.manager(id).qtable().values());
  LocalTier c(3, cfg, PowerModel{}, CategoryMap({5.0}), nullptr, 1);
  CHECK_THROWS(c.load(ck, "local"));
}

TEST_CASE("arrival stream recorder") {
  ArrivalStreamRecorder rec(2, nullptr);
  Server s = idle_server();
  rec.on_arrival(s, 0.0);
  rec.on_arrival(s, 4.0);
  rec.on_arrival(s, 10.0);
  s.id = 2;
  rec.on_arrival(s, 3.0);
  CHECK(rec.streams()[0] == std::vector<double>{4.0, 6.0});
  CHECK(rec.streams()[1].empty());
  CHECK_FALSE(rec.on_idle(s, 11.0).has_value());
}

TEST_CASE("decision log csv") {
  std::ostringstream out;
  write_decision_log(out, {{1.5, 2, 3, 30.0, -87.0}});
  CHECK(out.str().find("1.5,2,3,30,-87") != std::string::npos);
}
