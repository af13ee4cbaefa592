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

#include "hrm/global_tier.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "hrm/baselines.hpp"

namespace hrm {

void GroupLayout::validate() const {
  if (servers < 1 || resources < 1) throw ConfigError("layout needs servers and resources");
  if (groups < 1) throw ConfigError("group count must be >= 1");
  if (servers % groups != 0)
    throw ConfigError("server count " + std::to_string(servers) + " is not divisible by " +
                      std::to_string(groups) + " groups");
}

StateVector encode_state(const ClusterSnapshot& snap, const GroupLayout& layout,
                         double duration_scale_s) {
  layout.validate();
  if (snap.utilization.rows() != layout.servers || snap.utilization.cols() != layout.resources ||
      snap.job_demands.size() != layout.resources)
    throw DomainError("snapshot does not match the group layout");
  if (!(duration_scale_s > 0)) throw DomainError("duration scale must be positive");
  StateVector s(layout.state_size());
  Eigen::Index pos = 0;
  for (int m = 0; m < layout.servers; ++m)
    for (int p = 0; p < layout.resources; ++p) s(pos++) = snap.utilization(m, p);
  s.segment(pos, layout.resources) = snap.job_demands;
  pos += layout.resources;
  s(pos) = snap.job_duration / duration_scale_s;
  return s;
}

void GlobalConfig::validate() const {
  if (!(beta > 0)) throw ConfigError("global.beta must be > 0");
  if (!(time_unit_s > 0)) throw ConfigError("global.time_unit_s must be > 0");
  if (!(alpha > 0 && alpha <= 1)) throw ConfigError("global.alpha must be in (0, 1]");
  for (double e : {epsilon_start, epsilon_end, eval_epsilon})
    if (!(e >= 0 && e <= 1)) throw ConfigError("global epsilons must be in [0, 1]");
  if (!(w1 >= 0 && w2 >= 0 && w3 >= 0)) throw ConfigError("reward weights must be >= 0");
  if (!(reward_scale > 0)) throw ConfigError("global.reward_scale must be > 0");
  if (!(duration_scale_s > 0)) throw ConfigError("global.duration_scale_s must be > 0");
  if (memory_capacity < 1) throw ConfigError("global.memory_capacity must be >= 1");
  if (minibatch < 1) throw ConfigError("global.minibatch must be >= 1");
  if (refit_steps < 0 || offline_replays < 0 || online_episodes < 0 || autoencoder_epochs < 0)
    throw ConfigError("global episode and step counts must be >= 0");
  if (!(learning_rate > 0) || !(clip_norm > 0))
    throw ConfigError("global learning rate and clip norm must be > 0");
  if (groups < 1) throw ConfigError("global.groups must be >= 1");
}

double annealed_epsilon(double start, double end, int episode, int total) {
  const double half = std::max(1.0, total / 2.0);
  const double frac = std::min(1.0, std::max(0.0, episode / half));
  return start + (end - start) * frac;
}

int select_action(std::span<const double> q, double epsilon, Rng& rng,
                  std::span<const int> candidates) {
  if (q.empty()) throw DomainError("no actions");
  std::vector<int> all;
  if (candidates.empty()) {
    all.resize(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) all[i] = static_cast<int>(i);
    candidates = all;
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < epsilon) {
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    return candidates[pick(rng)] + 1;
  }
  int best = candidates.front();
  for (int c : candidates)
    if (q[static_cast<std::size_t>(c)] > q[static_cast<std::size_t>(best)] ||
        (q[static_cast<std::size_t>(c)] == q[static_cast<std::size_t>(best)] && c < best))
      best = c;
  return best + 1;
}

std::vector<int> feasible_servers(const Cluster& cluster, const Job& job) {
  std::vector<int> out;
  for (const Server& s : cluster.servers()) {
    std::vector<double> load(s.utilization.begin(), s.utilization.end());
    for (std::size_t idx : s.queue) {
      const Job& q = cluster.assigned_job(idx);
      for (std::size_t p = 0; p < load.size(); ++p) load[p] += q.demands[p];
    }
    bool fits = true;
    for (std::size_t p = 0; p < load.size(); ++p)
      if (load[p] + job.demands[p] > 1.0 + 1e-9) fits = false;
    if (fits) out.push_back(s.id - 1);
  }
  return out;
}

ReliabilityPenalty hot_spot_penalty(double threshold) {
  return [threshold](const Segment& seg) { return seg.cpu > threshold ? 1.0 : 0.0; };
}

double reward_rate_value(double total_power_w, double vms, double reliability,
                         const GlobalConfig& config) {
  return -config.w1 * total_power_w - config.w2 * vms - config.w3 * reliability;
}

double reward_rate(const Cluster& cluster, const GlobalConfig& config,
                   const ReliabilityPenalty& penalty) {
  double power = 0.0, vms = 0.0, reli = 0.0;
  for (const Server& s : cluster.servers()) {
    Segment seg;
    seg.cpu = s.cpu();
    seg.power_w = cluster.config().power.draw(s.mode, std::min(1.0, seg.cpu));
    seg.jobs_in_system = s.jobs_in_system();
    seg.mode = s.mode.kind;
    power += seg.power_w;
    vms += seg.jobs_in_system;
    if (config.w3 != 0.0) reli += penalty(seg);
  }
  return reward_rate_value(power, vms, reli, config);
}

double reward_rate(const Cluster& cluster, const GlobalConfig& config) {
  return reward_rate(cluster, config, hot_spot_penalty(config.hot_spot_threshold));
}

ExperienceMemory::ExperienceMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("experience memory capacity must be >= 1");
}

void ExperienceMemory::push(TransitionRecord record) {
  if (!(record.tau >= 0) || !std::isfinite(record.reward))
    throw InvariantError("transition with negative sojourn or non-finite reward");
  if (records_.size() == capacity_) records_.pop_front();
  records_.push_back(std::move(record));
}

std::vector<const TransitionRecord*> ExperienceMemory::sample(std::size_t n, Rng& rng) const {
  std::vector<const TransitionRecord*> out;
  if (records_.empty()) return out;
  std::uniform_int_distribution<std::size_t> pick(0, records_.size() - 1);
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(&records_[pick(rng)]);
  return out;
}

GlobalLearner::GlobalLearner(const GroupLayout& layout, const GlobalConfig& config, Rng& init_rng)
    : config_(config), net_(GlobalQNetwork<double>::create(layout, init_rng)) {
  config_.validate();
  neural::AdamConfig adam;
  adam.learning_rate = config_.learning_rate;
  ae_adam_ = neural::Adam<double>(*net_.autoencoder_store(), adam);
  subq_adam_ = neural::Adam<double>(*net_.subq_store(), adam);
}

std::vector<double> GlobalLearner::refit(const ExperienceMemory& memory, int steps, Rng& rng) {
  std::vector<double> losses;
  if (memory.empty()) {
    std::cerr << "warning: refit skipped, experience memory is empty\n";
    return losses;
  }
  const GlobalQNetwork<double> frozen = net_.clone();
  const auto batch_size = static_cast<std::size_t>(config_.minibatch);
  GlobalQNetwork<double>::ActionCache cache;
  for (int step = 0; step < steps; ++step) {
    const auto batch = memory.sample(batch_size, rng);
    auto ae_grads = net_.autoencoder_store()->zeros_like();
    auto subq_grads = net_.subq_store()->zeros_like();
    double loss = 0.0;
    for (const TransitionRecord* rec : batch) {
      const Eigen::VectorXd next_q = frozen.q_values(rec->next_state);
      const double target = smdp_target(rec->reward, rec->tau,
                                        std::span<const double>(next_q.data(), next_q.size()),
                                        config_.beta);
      const double q = net_.forward_action(rec->state, rec->action, cache);
      const double err = q - target;
      loss += 0.5 * err * err;
      net_.backward_action(cache, rec->action, err / double(batch.size()), ae_grads, subq_grads);
    }
    loss /= double(batch.size());
    // Clip on the norm across both stores.
    const double norm = std::sqrt(neural::global_norm(ae_grads) * neural::global_norm(ae_grads) +
                                  neural::global_norm(subq_grads) * neural::global_norm(subq_grads));
    if (norm > config_.clip_norm) {
      const double scale = config_.clip_norm / norm;
      for (auto& g : ae_grads) g *= scale;
      for (auto& g : subq_grads) g *= scale;
    }
    ae_adam_.step(*net_.autoencoder_store(), ae_grads);
    subq_adam_.step(*net_.subq_store(), subq_grads);
    losses.push_back(loss);
  }
  return losses;
}

double GlobalLearner::memory_loss(const ExperienceMemory& memory,
                                  const GlobalQNetwork<double>& target_net) const {
  if (memory.empty()) return 0.0;
  double total = 0.0;
  GlobalQNetwork<double>::ActionCache cache;
  for (std::size_t i = 0; i < memory.size(); ++i) {
    const auto& rec = memory.at(i);
    const Eigen::VectorXd next_q = target_net.q_values(rec.next_state);
    const double target = smdp_target(rec.reward, rec.tau,
                                      std::span<const double>(next_q.data(), next_q.size()),
                                      config_.beta);
    const double err = net_.forward_action(rec.state, rec.action, cache) - target;
    total += 0.5 * err * err;
  }
  return total / double(memory.size());
}

double GlobalLearner::pretrain_autoencoder(const ExperienceMemory& memory, int epochs, Rng& rng) {
  if (memory.empty()) throw DomainError("no states to pretrain the autoencoder on");
  const GroupLayout& layout = net_.layout();
  const std::size_t states = std::min(memory.size(), std::max<std::size_t>(
                                                         1, config_.autoencoder_samples /
                                                                static_cast<std::size_t>(layout.groups)));
  // Evenly spaced states across the memory.
  Eigen::MatrixXd data(static_cast<Eigen::Index>(states) * layout.groups, layout.block_size());
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < states; ++i) {
    const auto& s = memory.at(i * memory.size() / states).state;
    for (int k = 0; k < layout.groups; ++k) data.row(row++) = net_.group_block(s, k).transpose();
  }
  neural::AutoencoderTraining opts;
  opts.epochs = epochs;
  opts.adam.learning_rate = config_.learning_rate;
  opts.clip_norm = config_.clip_norm;
  return neural::train_autoencoder(net_.autoencoder(), data, opts, rng);
}

void GlobalLearner::save(neural::Checkpoint& ck, const std::string& prefix) const {
  const auto& l = net_.layout();
  Eigen::MatrixXd shape(1, 3);
  shape << l.servers, l.resources, l.groups;
  ck.add(prefix + ".layout", shape);
  ck.add_store(prefix + ".autoencoder", *net_.autoencoder_store());
  ck.add_store(prefix + ".subq", *net_.subq_store());
}

void GlobalLearner::load(const neural::Checkpoint& ck, const std::string& prefix) {
  const auto& shape = ck.get(prefix + ".layout");
  const auto& l = net_.layout();
  if (shape.size() != 3 || shape(0, 0) != l.servers || shape(0, 1) != l.resources ||
      shape(0, 2) != l.groups)
    throw ConfigError("checkpoint layout does not match the configured cluster");
  ck.load_store(prefix + ".autoencoder", *net_.autoencoder_store());
  ck.load_store(prefix + ".subq", *net_.subq_store());
}

DrlAllocator::DrlAllocator(const GlobalConfig& config, GlobalLearner& learner,
                           ExperienceMemory* memory, Rng rng, ReliabilityPenalty penalty)
    : config_(config),
      learner_(learner),
      memory_(memory),
      rng_(std::move(rng)),
      penalty_(penalty ? std::move(penalty) : hot_spot_penalty(config.hot_spot_threshold)),
      reward_(config.beta, config.time_unit_s) {}

int DrlAllocator::choose(Cluster& cluster, const Job& job) {
  cluster.flush_all();
  const double now = cluster.now();
  const auto& net = learner_.net();
  StateVector state = encode_state(cluster.snapshot(job), net.layout(), config_.duration_scale_s);
  const Eigen::VectorXd q = net.q_values(state);
  const std::span<const double> qspan(q.data(), static_cast<std::size_t>(q.size()));

  if (prev_state_) {
    const double reward = reward_.value();
    const double tau = reward_.tau(now);
    const double target = smdp_target(reward, tau, qspan, config_.beta);
    td_sum_ += std::abs(target - *prev_q_);
    ++td_count_;
    updated_.push_back(tabular_update(*prev_q_, target, config_.alpha));
    if (memory_) memory_->push({std::move(*prev_state_), prev_action_, reward, tau, state});
    ++transitions_;
  }
  reward_.start(now);

  int target;
  if (seed_) {
    target = seed_->choose(cluster, job);
  } else {
    std::vector<int> candidates;
    if (config_.feasibility_mask) candidates = feasible_servers(cluster, job);
    target = select_action(qspan, epsilon_, rng_, candidates);
  }
  prev_action_ = target - 1;
  prev_q_ = q(prev_action_);
  prev_state_ = std::move(state);
  return target;
}

void DrlAllocator::end_episode(Cluster&) {
  prev_state_.reset();
  prev_q_.reset();
  reward_.stop();
}

void DrlAllocator::on_segment(const Server&, const Segment& seg) {
  if (!reward_.active()) return;
  const double reli = config_.w3 != 0.0 ? penalty_(seg) : 0.0;
  const double rate = -config_.w1 * seg.power_w - config_.w2 * seg.jobs_in_system - config_.w3 * reli;
  reward_.add(seg.start, seg.duration, rate / config_.reward_scale);
}

double DrlAllocator::mean_td_error() const {
  return td_count_ ? td_sum_ / double(td_count_) : 0.0;
}

namespace {

EpisodeResult replay(DrlAllocator& allocator, const Trace& trace, const TierContext& context) {
  std::vector<ClusterObserver*> observers = context.observers;
  observers.push_back(&allocator);
  return run_episode(context.cluster, trace, allocator, context.power, observers);
}

}  // namespace

OfflineReport train_offline(GlobalLearner& learner, ExperienceMemory& memory,
                            const std::vector<Trace>& traces, const TierContext& context,
                            Rng& rng, int total_training_episodes) {
  if (traces.empty()) throw ConfigError("offline training needs at least one trace");
  const GlobalConfig& cfg = learner.config();
  OfflineReport report;
  for (int r = 0; r < cfg.offline_replays; ++r) {
    const Trace& trace = traces[static_cast<std::size_t>(r) % traces.size()];
    DrlAllocator allocator(cfg, learner, &memory, Rng(rng()));
    RoundRobin seed;
    if (r == 0)
      allocator.set_seed_policy(&seed);
    else
      allocator.set_epsilon(annealed_epsilon(cfg.epsilon_start, cfg.epsilon_end, r - 1,
                                             total_training_episodes));
    replay(allocator, trace, context);
    report.transitions += allocator.transitions();
    if (r == 0 && cfg.autoencoder_epochs > 0 && !memory.empty())
      report.autoencoder_mse = learner.pretrain_autoencoder(memory, cfg.autoencoder_epochs, rng);
    const auto losses = learner.refit(memory, cfg.refit_steps, rng);
    report.refit_losses.insert(report.refit_losses.end(), losses.begin(), losses.end());
  }
  return report;
}

EpisodeResult run_online_episode(GlobalLearner& learner, ExperienceMemory& memory,
                                 const Trace& trace, const TierContext& context, double epsilon,
                                 Rng& rng, bool refit) {
  DrlAllocator allocator(learner.config(), learner, &memory, Rng(rng()));
  allocator.set_epsilon(epsilon);
  EpisodeResult result = replay(allocator, trace, context);
  if (refit) learner.refit(memory, learner.config().refit_steps, rng);
  return result;
}

}  // namespace hrm
