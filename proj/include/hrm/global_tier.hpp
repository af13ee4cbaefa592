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

// Cluster-level VM allocator: a deep Q-network over the cluster state with
// one autoencoder and one Sub-Q network whose weights are shared by all
// server groups, trained with continuous-time (SMDP) Q-learning targets from
// an experience memory.

#ifndef HRM_GLOBAL_TIER_HPP
#define HRM_GLOBAL_TIER_HPP

#include <Eigen/Dense>

#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "hrm/episode.hpp"
#include "hrm/neural/adam.hpp"
#include "hrm/neural/autoencoder.hpp"
#include "hrm/neural/checkpoint.hpp"
#include "hrm/neural/dense.hpp"
#include "hrm/smdp.hpp"

namespace hrm {

/// M servers split into K groups of contiguous ids.
struct GroupLayout {
  int servers = 10;
  int resources = kDefaultResources;
  int groups = 2;

  int group_size() const { return servers / groups; }
  int block_size() const { return group_size() * resources; }
  int job_size() const { return resources + 1; }
  int state_size() const { return servers * resources + job_size(); }
  /// 0-based group of a 0-based server index.
  int group_of(int server) const { return server / group_size(); }
  void validate() const;
};

/// [g_1, ..., g_K, u_j1..u_jD, d_j / duration_scale], row-major per server.
using StateVector = Eigen::VectorXd;

StateVector encode_state(const ClusterSnapshot& snapshot, const GroupLayout& layout,
                         double duration_scale_s);

/// Q network with the allocator's weight sharing. Sub-Q input for group k is
/// [raw block k, codes of groups k+1, ..., k-1 (cyclic), job fields]; the K
/// output blocks are concatenated in server order.
template <typename Scalar>
class GlobalQNetwork {
 public:
  static constexpr int kSubQHidden = 128;
  using Vec = neural::Vector<Scalar>;

  struct ActionCache {
    int group = 0;
    std::vector<int> others;
    std::vector<neural::DenseCache<Scalar>> encoder;
    neural::DenseCache<Scalar> subq;
    Scalar q = 0;
  };

  GlobalQNetwork() = default;

  static GlobalQNetwork create(const GroupLayout& layout, Rng& rng) {
    layout.validate();
    GlobalQNetwork net;
    net.layout_ = layout;
    net.ae_ = neural::Autoencoder<Scalar>::create(layout.block_size(), rng);
    net.subq_store_ = std::make_shared<neural::ParamStore<Scalar>>();
    net.subq_ = neural::DenseStack<Scalar>::create(
        {{net.subq_input_size(), kSubQHidden, neural::Activation::Elu},
         {kSubQHidden, layout.group_size(), neural::Activation::Linear}},
        net.subq_store_, "subq", rng);
    return net;
  }

  GlobalQNetwork clone() const {
    GlobalQNetwork net;
    net.layout_ = layout_;
    net.ae_ = ae_.clone();
    net.subq_store_ = std::make_shared<neural::ParamStore<Scalar>>(*subq_store_);
    net.subq_ = neural::DenseStack<Scalar>(subq_.layers(), net.subq_store_, subq_.first_index());
    return net;
  }

  const GroupLayout& layout() const { return layout_; }
  neural::Autoencoder<Scalar>& autoencoder() { return ae_; }
  const neural::Autoencoder<Scalar>& autoencoder() const { return ae_; }
  const neural::StorePtr<Scalar>& subq_store() const { return subq_store_; }
  const neural::StorePtr<Scalar>& autoencoder_store() const { return ae_.store(); }

  /// Per-group views. Every group's view references the same parameters.
  neural::DenseStack<Scalar> logical_encoder(int group) const { check_group(group); return ae_.encoder(); }
  neural::DenseStack<Scalar> logical_subq(int group) const { check_group(group); return subq_; }

  int code_size() const { return ae_.code_size(); }
  int subq_input_size() const {
    return layout_.block_size() + (layout_.groups - 1) * neural::Autoencoder<Scalar>::kCode +
           layout_.job_size();
  }

  Vec group_block(const Vec& state, int group) const {
    return state.segment(group * layout_.block_size(), layout_.block_size());
  }

  /// Groups feeding group k's Sub-Q, in input order.
  std::vector<int> others_of(int group) const {
    std::vector<int> out;
    for (int j = 1; j < layout_.groups; ++j) out.push_back((group + j) % layout_.groups);
    return out;
  }

  Vec q_values(const Vec& state) const {
    check_state(state);
    const int K = layout_.groups, G = layout_.group_size();
    std::vector<Vec> codes(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) codes[static_cast<std::size_t>(k)] = ae_.encode(group_block(state, k));
    Vec out(layout_.servers);
    for (int k = 0; k < K; ++k) {
      const Vec in = subq_input(state, k, [&](int g) -> const Vec& { return codes[static_cast<std::size_t>(g)]; });
      out.segment(k * G, G) = subq_.forward(in);
    }
    return out;
  }

  /// Q value of one action (0-based server) with activations cached.
  Scalar forward_action(const Vec& state, int action, ActionCache& cache) const {
    check_state(state);
    if (action < 0 || action >= layout_.servers) throw DomainError("action out of range");
    cache.group = layout_.group_of(action);
    cache.others = others_of(cache.group);
    cache.encoder.assign(static_cast<std::size_t>(layout_.groups), {});
    std::vector<Vec> codes(static_cast<std::size_t>(layout_.groups));
    for (int g : cache.others)
      codes[static_cast<std::size_t>(g)] =
          ae_.encoder().forward(group_block(state, g), &cache.encoder[static_cast<std::size_t>(g)]);
    const Vec in =
        subq_input(state, cache.group, [&](int g) -> const Vec& { return codes[static_cast<std::size_t>(g)]; });
    const Vec out = subq_.forward(in, &cache.subq);
    cache.q = out(action - cache.group * layout_.group_size());
    return cache.q;
  }

  /// Accumulates d(dq * Q)/d(params) into the two gradient lists.
  void backward_action(const ActionCache& cache, int action, Scalar dq,
                       neural::Gradients<Scalar>& ae_grads,
                       neural::Gradients<Scalar>& subq_grads) const {
    Vec dout = Vec::Zero(layout_.group_size());
    dout(action - cache.group * layout_.group_size()) = dq;
    const Vec din = subq_.backward(cache.subq, dout, subq_grads);
    const int C = code_size();
    for (std::size_t j = 0; j < cache.others.size(); ++j) {
      const int g = cache.others[j];
      const Vec dcode = din.segment(layout_.block_size() + static_cast<int>(j) * C, C);
      ae_.encoder().backward(cache.encoder[static_cast<std::size_t>(g)], dcode, ae_grads);
    }
  }

 private:
  template <typename CodeOf>
  Vec subq_input(const Vec& state, int group, CodeOf&& code_of) const {
    Vec in(subq_input_size());
    const int B = layout_.block_size(), C = code_size();
    in.segment(0, B) = group_block(state, group);
    int pos = B;
    for (int g : others_of(group)) {
      in.segment(pos, C) = code_of(g);
      pos += C;
    }
    in.segment(pos, layout_.job_size()) = state.tail(layout_.job_size());
    return in;
  }

  void check_state(const Vec& state) const {
    if (state.size() != layout_.state_size())
      throw DomainError("state has length " + std::to_string(state.size()) + ", expected " +
                        std::to_string(layout_.state_size()));
  }
  void check_group(int group) const {
    if (group < 0 || group >= layout_.groups) throw DomainError("group out of range");
  }

  GroupLayout layout_;
  neural::Autoencoder<Scalar> ae_;
  neural::StorePtr<Scalar> subq_store_;
  neural::DenseStack<Scalar> subq_;
};

struct GlobalConfig {
  int groups = 2;
  double beta = 0.5;
  double time_unit_s = 60.0;  // discounting clock: beta per this many seconds
  double alpha = 0.1;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double eval_epsilon = 0.0;
  double w1 = 1.0;   // total power (W)
  double w2 = 10.0;  // jobs in system
  double w3 = 0.0;   // reliability penalty
  double hot_spot_threshold = 0.9;
  double reward_scale = 1000.0;  // rewards are divided by this before learning
  double duration_scale_s = kMaxTraceDuration;
  bool feasibility_mask = true;
  std::size_t memory_capacity = 50000;
  int minibatch = 32;
  int refit_steps = 300;
  double learning_rate = 1e-3;
  double clip_norm = 10.0;
  int offline_replays = 5;
  int online_episodes = 3;
  int autoencoder_epochs = 10;
  std::size_t autoencoder_samples = 20000;

  void validate() const;
};

/// Linear from start to end over the first half of total episodes, then
/// held at end.
double annealed_epsilon(double start, double end, int episode, int total);

/// Uniform over candidates (0-based; empty means all servers) with
/// probability epsilon, else the argmax among them with ties to the lowest
/// index. Returns a 1-based server id.
int select_action(std::span<const double> q_values, double epsilon, Rng& rng,
                  std::span<const int> candidates = {});

/// 0-based servers where job starts without waiting for a running job:
/// running plus queued plus job demands fit in every resource, whatever the
/// power mode (the allocator's state does not show power modes). Empty when
/// there are none.
std::vector<int> feasible_servers(const Cluster& cluster, const Job& job);

/// Reliability penalty rate of one server interval.
using ReliabilityPenalty = std::function<double(const Segment&)>;

/// 1 while CPU utilization exceeds threshold.
ReliabilityPenalty hot_spot_penalty(double threshold);

/// -w1 P - w2 N - w3 R.
double reward_rate_value(double total_power_w, double vms, double reliability,
                         const GlobalConfig& config);

/// Instantaneous cluster reward rate at the current clock.
double reward_rate(const Cluster& cluster, const GlobalConfig& config,
                   const ReliabilityPenalty& penalty);
double reward_rate(const Cluster& cluster, const GlobalConfig& config);

struct TransitionRecord {
  StateVector state;
  int action = 0;  // 0-based server
  double reward = 0.0;
  double tau = 0.0;  // in discount time units
  StateVector next_state;
};

class ExperienceMemory {
 public:
  explicit ExperienceMemory(std::size_t capacity);
  void push(TransitionRecord record);
  std::size_t size() const { return records_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return records_.empty(); }
  const TransitionRecord& at(std::size_t i) const { return records_.at(i); }
  /// Uniform with replacement.
  std::vector<const TransitionRecord*> sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::deque<TransitionRecord> records_;
};

/// Network plus its optimizers; owns refitting.
class GlobalLearner {
 public:
  GlobalLearner(const GroupLayout& layout, const GlobalConfig& config, Rng& init_rng);

  GlobalQNetwork<double>& net() { return net_; }
  const GlobalQNetwork<double>& net() const { return net_; }
  const GlobalConfig& config() const { return config_; }

  /// Regresses Q(s)[a] onto R + exp(-beta tau) max Q_frozen(s') over steps
  /// uniform minibatches, Adam with global-norm clipping. The frozen copy is
  /// taken once per call. Returns one minibatch loss per step; empty memory
  /// is a no-op.
  std::vector<double> refit(const ExperienceMemory& memory, int steps, Rng& rng);

  /// Mean half squared error over the whole memory against a given target
  /// network.
  double memory_loss(const ExperienceMemory& memory, const GlobalQNetwork<double>& target) const;

  /// Trains the shared autoencoder on group blocks of stored states. Returns
  /// the reconstruction MSE.
  double pretrain_autoencoder(const ExperienceMemory& memory, int epochs, Rng& rng);

  void save(neural::Checkpoint& ck, const std::string& prefix) const;
  void load(const neural::Checkpoint& ck, const std::string& prefix);

 private:
  GlobalConfig config_;
  GlobalQNetwork<double> net_;
  neural::Adam<double> ae_adam_, subq_adam_;
};

/// Allocation epoch handler: encodes the state, closes the previous
/// transition into memory, and picks a server epsilon-greedily from the
/// network (or from a seed policy while bootstrapping).
class DrlAllocator : public AllocationPolicy, public ClusterObserver {
 public:
  DrlAllocator(const GlobalConfig& config, GlobalLearner& learner, ExperienceMemory* memory,
               Rng rng, ReliabilityPenalty penalty = {});

  void set_epsilon(double epsilon) { epsilon_ = epsilon; }
  double epsilon() const { return epsilon_; }
  /// Not owned; while set, actions come from seed.
  void set_seed_policy(AllocationPolicy* seed) { seed_ = seed; }

  int choose(Cluster& cluster, const Job& job) override;
  void end_episode(Cluster& cluster) override;
  void on_segment(const Server& server, const Segment& segment) override;

  std::size_t transitions() const { return transitions_; }
  /// Mean |target - Q(s,a)| over closed transitions this episode.
  double mean_td_error() const;
  /// Tabular-updated estimates Q + alpha (target - Q) of closed transitions.
  const std::vector<double>& updated_estimates() const { return updated_; }

 private:
  GlobalConfig config_;
  GlobalLearner& learner_;
  ExperienceMemory* memory_;
  Rng rng_;
  ReliabilityPenalty penalty_;
  AllocationPolicy* seed_ = nullptr;
  DiscountedAccumulator reward_;
  double epsilon_ = 0.0;

  std::optional<StateVector> prev_state_;
  std::optional<double> prev_q_;
  int prev_action_ = 0;
  std::size_t transitions_ = 0;
  double td_sum_ = 0.0;
  std::size_t td_count_ = 0;
  std::vector<double> updated_;
};

/// Offline construction: replay the traces first under round-robin, then
/// epsilon-greedy on the improving network, storing transitions, pretraining
/// the autoencoder after the first replay and refitting after each.
struct OfflineReport {
  std::vector<double> refit_losses;
  double autoencoder_mse = 0.0;
  std::size_t transitions = 0;
};

struct TierContext {
  ClusterConfig cluster;
  PowerController* power = nullptr;
  std::vector<ClusterObserver*> observers;
};

OfflineReport train_offline(GlobalLearner& learner, ExperienceMemory& memory,
                            const std::vector<Trace>& traces, const TierContext& context,
                            Rng& rng, int total_training_episodes);

/// One execution sequence with learning: epsilon-greedy allocation, stored
/// transitions, refit at the end.
EpisodeResult run_online_episode(GlobalLearner& learner, ExperienceMemory& memory,
                                 const Trace& trace, const TierContext& context, double epsilon,
                                 Rng& rng, bool refit = true);

}  // namespace hrm

#endif  // HRM_GLOBAL_TIER_HPP
