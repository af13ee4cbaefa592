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

#include "hrm/local_tier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "hrm/neural/adam.hpp"

namespace hrm {

void LocalConfig::validate() const {
  if (!(w >= 0 && w <= 1)) throw ConfigError("local.w must be in [0, 1]");
  if (!(power_unit_w > 0)) throw ConfigError("local.power_unit_w must be > 0");
  if (!(beta > 0)) throw ConfigError("local.beta must be > 0");
  if (!(time_unit_s > 0)) throw ConfigError("local.time_unit_s must be > 0");
  if (!(alpha >= 0 && alpha <= 1)) throw ConfigError("local.alpha must be in [0, 1]");
  if (!(epsilon_start >= 0 && epsilon_start <= 1) || !(epsilon_end >= 0 && epsilon_end <= 1))
    throw ConfigError("local epsilons must be in [0, 1]");
  if (timeouts.empty() || std::find(timeouts.begin(), timeouts.end(), 0.0) == timeouts.end())
    throw ConfigError("local.timeouts must include 0");
  for (double t : timeouts)
    if (!(t >= 0) || !std::isfinite(t)) throw ConfigError("local.timeouts must be finite and >= 0");
  if (categories < 1) throw ConfigError("local.categories must be >= 1");
  if (!(interarrival_scale_s > 0)) throw ConfigError("local.interarrival_scale_s must be > 0");
  if (train_episodes < 0 || predictor_steps < 0 || predictor_batch < 1)
    throw ConfigError("local training counts are invalid");
  if (!(predictor_learning_rate > 0)) throw ConfigError("local.predictor_learning_rate must be > 0");
  if (!(bootstrap_timeout_s >= 0)) throw ConfigError("local.bootstrap_timeout_s must be >= 0");
}

void InterArrivalWindow::observe_arrival(double now) {
  if (last_) push(now - *last_);
  last_ = now;
}

void InterArrivalWindow::push(double inter_arrival) {
  ring_[head_] = inter_arrival;
  head_ = (head_ + 1) % kCapacity;
  count_ = std::min(count_ + 1, kCapacity);
}

std::vector<double> InterArrivalWindow::values() const {
  std::vector<double> out;
  out.reserve(count_);
  const std::size_t start = (head_ + kCapacity - count_) % kCapacity;
  for (std::size_t i = 0; i < count_; ++i) out.push_back(ring_[(start + i) % kCapacity]);
  return out;
}

double InterArrivalWindow::mean() const {
  if (count_ == 0) return 0.0;
  const auto v = values();
  return std::accumulate(v.begin(), v.end(), 0.0) / double(count_);
}

CategoryMap::CategoryMap(std::vector<double> boundaries) : boundaries_(std::move(boundaries)) {
  for (std::size_t i = 1; i < boundaries_.size(); ++i)
    if (!(boundaries_[i] > boundaries_[i - 1]))
      throw DomainError("category boundaries must be strictly increasing");
}

CategoryMap CategoryMap::from_quantiles(std::span<const double> samples, int n) {
  if (samples.empty()) throw DomainError("no samples for category boundaries");
  if (n < 1) throw DomainError("category count must be >= 1");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> bounds;
  for (int k = 1; k < n; ++k) {
    const std::size_t idx = std::min(sorted.size() - 1, static_cast<std::size_t>(k) * sorted.size() /
                                                            static_cast<std::size_t>(n));
    const double b = sorted[idx];
    if (bounds.empty() || b > bounds.back()) bounds.push_back(b);
  }
  return CategoryMap(std::move(bounds));
}

int CategoryMap::category(double x) const {
  return static_cast<int>(std::upper_bound(boundaries_.begin(), boundaries_.end(), x) -
                          boundaries_.begin());
}

double predict_interarrival(const Predictor& model, std::span<const double> window_s, double scale_s) {
  std::vector<double> x(window_s.begin(), window_s.end());
  for (double& v : x) v /= scale_s;
  return model.forward(x) * scale_s;
}

int predict_category(const Predictor* model, const InterArrivalWindow& window,
                     const CategoryMap& map, double scale_s) {
  if (window.size() == 0) return map.count() - 1;
  if (!model || !window.full()) return map.category(window.mean());
  const auto values = window.values();
  return map.category(predict_interarrival(*model, values, scale_s));
}

namespace {

struct WindowRef {
  std::size_t stream;
  std::size_t end;  // target index
};

std::vector<WindowRef> windows_of(const std::vector<std::vector<double>>& streams, std::size_t look_back) {
  std::vector<WindowRef> out;
  for (std::size_t s = 0; s < streams.size(); ++s)
    for (std::size_t i = look_back; i < streams[s].size(); ++i) out.push_back({s, i});
  return out;
}

}  // namespace

PredictorReport train_predictor(Predictor& model, const std::vector<std::vector<double>>& streams,
                                const PredictorTraining& opts, Rng& rng) {
  const auto look_back = static_cast<std::size_t>(model.look_back());
  const auto windows = windows_of(streams, look_back);
  if (windows.empty()) throw DomainError("no stream is longer than the look-back window");
  if (!(opts.scale_s > 0)) throw DomainError("predictor scale must be positive");

  std::vector<std::vector<double>> norm(streams.size());
  for (std::size_t s = 0; s < streams.size(); ++s) {
    norm[s] = streams[s];
    for (double& v : norm[s]) v /= opts.scale_s;
  }

  // Fixed evaluation subset, evenly spaced.
  std::vector<WindowRef> eval;
  const std::size_t n_eval = std::min(opts.eval_windows, windows.size());
  for (std::size_t i = 0; i < n_eval; ++i) eval.push_back(windows[i * windows.size() / n_eval]);
  auto eval_mse = [&]() {
    double total = 0.0;
    for (const auto& w : eval) {
      const auto& s = norm[w.stream];
      const double y = model.forward(std::span<const double>(s.data() + w.end - look_back, look_back));
      total += (y - s[w.end]) * (y - s[w.end]);
    }
    return total / double(eval.size());
  };

  neural::AdamConfig adam_cfg;
  adam_cfg.learning_rate = opts.learning_rate;
  neural::Adam<double> adam(*model.store(), adam_cfg);
  const long per_epoch =
      std::max<long>(1, static_cast<long>(windows.size()) / std::max(1, opts.batch_size));
  const long steps = std::min<long>(opts.max_steps, per_epoch * opts.epochs);
  std::uniform_int_distribution<std::size_t> pick(0, windows.size() - 1);

  PredictorReport report;
  report.windows = windows.size();
  report.mse.push_back(eval_mse());
  for (long step = 0; step < steps; ++step) {
    auto grads = model.store()->zeros_like();
    for (int b = 0; b < opts.batch_size; ++b) {
      const auto& w = windows[pick(rng)];
      const auto& s = norm[w.stream];
      model.loss_and_gradient(std::span<const double>(s.data() + w.end - look_back, look_back),
                              s[w.end], grads);
    }
    for (auto& g : grads) g /= double(opts.batch_size);
    neural::clip_gradients(grads, opts.clip_norm);
    adam.step(*model.store(), grads);
    ++report.steps;
    if (opts.report_every > 0 && report.steps % opts.report_every == 0) report.mse.push_back(eval_mse());
  }
  if (opts.report_every <= 0 || report.steps % opts.report_every != 0) report.mse.push_back(eval_mse());
  return report;
}

double predictor_mse(const Predictor& model, const std::vector<std::vector<double>>& streams,
                     double scale_s) {
  const auto look_back = static_cast<std::size_t>(model.look_back());
  const auto windows = windows_of(streams, look_back);
  if (windows.empty()) throw DomainError("no stream is longer than the look-back window");
  double total = 0.0;
  for (const auto& w : windows) {
    const auto& s = streams[w.stream];
    const double y = predict_interarrival(
        model, std::span<const double>(s.data() + w.end - look_back, look_back), scale_s);
    total += (y - s[w.end]) * (y - s[w.end]);
  }
  return total / double(windows.size());
}

DpmQTable::DpmQTable(int states, std::vector<double> timeouts)
    : values_(Eigen::MatrixXd::Zero(states, static_cast<Eigen::Index>(timeouts.size()))),
      timeouts_(std::move(timeouts)) {
  if (states < 1 || timeouts_.empty()) throw DomainError("Q table needs states and actions");
  if (std::find(timeouts_.begin(), timeouts_.end(), 0.0) == timeouts_.end())
    throw DomainError("timeout action set must include 0");
}

int DpmQTable::argmax(int state) const {
  int best = 0;
  for (int a = 1; a < actions(); ++a)
    if (values_(state, a) > values_(state, best)) best = a;
  return best;
}

int dpm_decide(const DpmQTable& table, int state, double epsilon, Rng& rng) {
  if (state < 0 || state >= table.states()) throw DomainError("DPM state out of range");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < epsilon) {
    std::uniform_int_distribution<int> pick(0, table.actions() - 1);
    return pick(rng);
  }
  return table.argmax(state);
}

void dpm_update(DpmQTable& table, int state, int action, double reward, double tau,
                int next_state, double alpha, double beta) {
  const Eigen::VectorXd next = table.values().row(next_state).transpose();
  const double target =
      smdp_target(reward, tau, std::span<const double>(next.data(), next.size()), beta);
  table.at(state, action) = tabular_update(table.at(state, action), target, alpha);
}

double local_reward_rate_value(double power_w, int jobs_in_system, double w, double power_unit_w) {
  return -w * power_w / power_unit_w - (1.0 - w) * jobs_in_system;
}

double local_reward_rate(const Server& server, const PowerModel& power, double w,
                         double power_unit_w) {
  return local_reward_rate_value(power.draw(server.mode, std::min(1.0, server.cpu())),
                                 server.jobs_in_system(), w, power_unit_w);
}

ServerPowerManager::ServerPowerManager(int server_id, const LocalConfig& config,
                                       const PowerModel& power, const CategoryMap& categories,
                                       std::shared_ptr<const Predictor> predictor, Rng rng)
    : id_(server_id),
      config_(config),
      power_(power),
      categories_(categories),
      predictor_(std::move(predictor)),
      rng_(std::move(rng)),
      table_(categories.count(), config.timeouts),
      reward_(config.beta, config.time_unit_s) {}

double ServerPowerManager::decide(const Server& server, double now) {
  if (server.id != id_) throw InvariantError("power manager called for another server");
  const int state = predict_category(predictor_.get(), window_, categories_, config_.interarrival_scale_s);
  if (pending_ && learning_) {
    dpm_update(table_, pending_->first, pending_->second, reward_.value(), reward_.tau(now), state,
               config_.alpha, config_.beta);
    ++updates_;
  }
  const int action = dpm_decide(table_, state, epsilon_, rng_);
  reward_.start(now);
  pending_ = {state, action};
  const double timeout = table_.timeout(action);
  if (log_)
    log_->push_back({now, id_, state, timeout,
                     local_reward_rate(server, power_, config_.w, config_.power_unit_w)});
  return timeout;
}

void ServerPowerManager::observe_arrival(double now) {
  const auto last = window_.last_arrival();
  window_.observe_arrival(now);
  if (record_stream_ && last) stream_.push_back(now - *last);
}

void ServerPowerManager::on_segment(const Segment& seg) {
  if (!pending_) return;
  reward_.add(seg.start, seg.duration,
              local_reward_rate_value(seg.power_w, seg.jobs_in_system, config_.w, config_.power_unit_w));
}

void ServerPowerManager::reset_episode() {
  pending_.reset();
  reward_.stop();
  window_ = InterArrivalWindow{};
}

LocalTier::LocalTier(int servers, const LocalConfig& config, const PowerModel& power,
                     const CategoryMap& categories, std::shared_ptr<const Predictor> predictor,
                     std::uint64_t seed) {
  config.validate();
  managers_.reserve(static_cast<std::size_t>(servers));
  for (int id = 1; id <= servers; ++id)
    managers_.emplace_back(id, config, power, categories, predictor,
                           make_stream(seed, "local.server." + std::to_string(id)));
}

std::optional<double> LocalTier::on_idle(const Server& server, double now) {
  return manager(server.id).decide(server, now);
}

void LocalTier::on_arrival(const Server& server, double now) {
  manager(server.id).observe_arrival(now);
}

void LocalTier::on_segment(const Server& server, const Segment& segment) {
  manager(server.id).on_segment(segment);
}

void LocalTier::set_epsilon(double epsilon) {
  for (auto& m : managers_) m.set_epsilon(epsilon);
}

void LocalTier::set_learning(bool on) {
  for (auto& m : managers_) m.set_learning(on);
}

void LocalTier::set_record_streams(bool on) {
  for (auto& m : managers_) m.set_record_stream(on);
}

void LocalTier::enable_log(bool on) {
  for (auto& m : managers_) m.set_log(on ? &log_ : nullptr);
}

void LocalTier::reset_episode() {
  for (auto& m : managers_) m.reset_episode();
}

std::vector<std::vector<double>> LocalTier::streams() const {
  std::vector<std::vector<double>> out;
  for (const auto& m : managers_) out.push_back(m.stream());
  return out;
}

void LocalTier::save(neural::Checkpoint& ck, const std::string& prefix) const {
  for (const auto& m : managers_)
    ck.add(prefix + ".qtable." + std::to_string(m.server_id()), m.qtable().values());
}

void LocalTier::load(const neural::Checkpoint& ck, const std::string& prefix) {
  for (auto& m : managers_) {
    const auto& v = ck.get(prefix + ".qtable." + std::to_string(m.server_id()));
    if (v.rows() != m.qtable().states() || v.cols() != m.qtable().actions())
      throw ConfigError("checkpoint Q table shape does not match the local configuration");
    m.qtable().values() = v;
  }
}

ArrivalStreamRecorder::ArrivalStreamRecorder(int servers, PowerController* inner)
    : inner_(inner),
      last_(static_cast<std::size_t>(servers)),
      streams_(static_cast<std::size_t>(servers)) {}

std::optional<double> ArrivalStreamRecorder::on_idle(const Server& server, double now) {
  return inner_ ? inner_->on_idle(server, now) : std::nullopt;
}

void ArrivalStreamRecorder::on_arrival(const Server& server, double now) {
  auto& last = last_[static_cast<std::size_t>(server.id - 1)];
  if (last) streams_[static_cast<std::size_t>(server.id - 1)].push_back(now - *last);
  last = now;
  if (inner_) inner_->on_arrival(server, now);
}

void write_decision_log(std::ostream& out, const std::vector<DecisionLogEntry>& log) {
  out << "time_s,server_id,state_category,action_timeout_s,reward_rate\n";
  for (const auto& e : log)
    out << format_double(e.time_s) << ',' << e.server << ',' << e.category << ','
        << format_double(e.timeout_s) << ',' << format_double(e.reward_rate) << '\n';
}

}  // namespace hrm
