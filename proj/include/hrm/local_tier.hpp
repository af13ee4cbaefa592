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

// Per-server power management: an LSTM predicts the next inter-arrival time,
// the prediction is binned into a category, and a tabular continuous-time
// Q-learner picks the idle timeout for that category.

#ifndef HRM_LOCAL_TIER_HPP
#define HRM_LOCAL_TIER_HPP

#include <Eigen/Dense>

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "hrm/cluster.hpp"
#include "hrm/neural/checkpoint.hpp"
#include "hrm/neural/lstm.hpp"
#include "hrm/smdp.hpp"

namespace hrm {

using Predictor = neural::LstmRegressor<double>;

struct LocalConfig {
  double w = 0.5;  // power weight; 1 - w weighs jobs in system
  double power_unit_w = 1.0;  // power enters the reward as P / power_unit_w
  double beta = 0.5;
  double time_unit_s = 60.0;
  double alpha = 0.1;
  double epsilon_start = 0.5;
  double epsilon_end = 0.05;
  std::vector<double> timeouts{0.0, 10.0, 30.0, 60.0, 120.0};
  int categories = 10;
  double interarrival_scale_s = 300.0;
  int train_episodes = 3;
  int predictor_steps = 2000;
  int predictor_batch = 16;
  double predictor_learning_rate = 1e-3;
  double bootstrap_timeout_s = 60.0;

  void validate() const;
};

/// The most recent inter-arrival times seen at one server.
class InterArrivalWindow {
 public:
  static constexpr std::size_t kCapacity = Predictor::kLookBack;

  /// Records an arrival; the first arrival only sets the reference time.
  void observe_arrival(double now);
  void push(double inter_arrival);

  bool full() const { return count_ == kCapacity; }
  std::size_t size() const { return count_; }
  /// Oldest first.
  std::vector<double> values() const;
  double mean() const;
  std::optional<double> last_arrival() const { return last_; }

 private:
  std::array<double, kCapacity> ring_{};
  std::size_t head_ = 0;  // next write slot
  std::size_t count_ = 0;
  std::optional<double> last_;
};

/// Ascending boundaries b_1 < ... < b_{n-1}; x maps to the number of
/// boundaries <= x.
class CategoryMap {
 public:
  CategoryMap() = default;
  explicit CategoryMap(std::vector<double> boundaries);

  /// Boundaries at the k/n sample quantiles, duplicates dropped.
  static CategoryMap from_quantiles(std::span<const double> samples, int n);

  int category(double x) const;
  int count() const { return static_cast<int>(boundaries_.size()) + 1; }
  const std::vector<double>& boundaries() const { return boundaries_; }

 private:
  std::vector<double> boundaries_;
};

/// LSTM prediction on the normalized window, binned. Falls back to the
/// window mean while the window is not full (or no model is given), and to
/// the top category for an empty window.
int predict_category(const Predictor* model, const InterArrivalWindow& window,
                     const CategoryMap& map, double scale_s);
double predict_interarrival(const Predictor& model, std::span<const double> window_s, double scale_s);

struct PredictorTraining {
  int max_steps = 2000;
  int epochs = 1000;
  int batch_size = 16;
  double learning_rate = 1e-3;
  double clip_norm = 10.0;
  double scale_s = 300.0;
  int report_every = 100;
  std::size_t eval_windows = 512;
};

struct PredictorReport {
  std::vector<double> mse;  // normalized units, one entry per report
  std::size_t windows = 0;
  int steps = 0;
};

/// Sliding look-back windows over each stream (windows never span streams)
/// regressed onto the next value with BPTT and Adam.
PredictorReport train_predictor(Predictor& model, const std::vector<std::vector<double>>& streams,
                                const PredictorTraining& options, Rng& rng);

/// Mean squared error in seconds^2 over every window of the streams.
double predictor_mse(const Predictor& model, const std::vector<std::vector<double>>& streams,
                     double scale_s);

class DpmQTable {
 public:
  DpmQTable() = default;
  DpmQTable(int states, std::vector<double> timeouts);

  int states() const { return static_cast<int>(values_.rows()); }
  int actions() const { return static_cast<int>(values_.cols()); }
  double timeout(int action) const { return timeouts_.at(static_cast<std::size_t>(action)); }
  const std::vector<double>& timeouts() const { return timeouts_; }
  double& at(int state, int action) { return values_(state, action); }
  double at(int state, int action) const { return values_(state, action); }
  Eigen::MatrixXd& values() { return values_; }
  const Eigen::MatrixXd& values() const { return values_; }
  int argmax(int state) const;  // ties to the lowest index

 private:
  Eigen::MatrixXd values_;
  std::vector<double> timeouts_;
};

/// Epsilon-greedy action index.
int dpm_decide(const DpmQTable& table, int state, double epsilon, Rng& rng);

/// Q[s][a] += alpha (R + exp(-beta tau) max_a' Q[s'][a'] - Q[s][a]).
void dpm_update(DpmQTable& table, int state, int action, double reward, double tau,
                int next_state, double alpha, double beta);

/// -w P / power_unit - (1 - w) JQ.
double local_reward_rate_value(double power_w, int jobs_in_system, double w,
                               double power_unit_w = 1.0);
double local_reward_rate(const Server& server, const PowerModel& power, double w,
                         double power_unit_w = 1.0);

struct DecisionLogEntry {
  double time_s = 0.0;
  int server = 0;
  int category = 0;
  double timeout_s = 0.0;
  double reward_rate = 0.0;
};

/// The manager of one server. Its inputs are that server's state and
/// arrivals only.
class ServerPowerManager {
 public:
  ServerPowerManager(int server_id, const LocalConfig& config, const PowerModel& power,
                     const CategoryMap& categories, std::shared_ptr<const Predictor> predictor,
                     Rng rng);

  int server_id() const { return id_; }
  /// Idle-with-empty-queue epoch: closes the previous decision's update and
  /// returns the chosen timeout.
  double decide(const Server& server, double now);
  void observe_arrival(double now);
  void on_segment(const Segment& segment);

  void set_epsilon(double epsilon) { epsilon_ = epsilon; }
  void set_learning(bool on) { learning_ = on; }
  void set_log(std::vector<DecisionLogEntry>* log) { log_ = log; }
  void set_record_stream(bool on) { record_stream_ = on; }
  /// Forgets the pending decision (episode boundary).
  void reset_episode();

  DpmQTable& qtable() { return table_; }
  const DpmQTable& qtable() const { return table_; }
  const InterArrivalWindow& window() const { return window_; }
  const std::vector<double>& stream() const { return stream_; }
  std::size_t updates() const { return updates_; }

 private:
  int id_;
  LocalConfig config_;
  PowerModel power_;
  CategoryMap categories_;
  std::shared_ptr<const Predictor> predictor_;
  Rng rng_;
  DpmQTable table_;
  InterArrivalWindow window_;
  DiscountedAccumulator reward_;
  std::optional<std::pair<int, int>> pending_;  // (state, action)
  double epsilon_ = 0.0;
  bool learning_ = true;
  bool record_stream_ = false;
  std::vector<double> stream_;
  std::vector<DecisionLogEntry>* log_ = nullptr;
  std::size_t updates_ = 0;
};

/// One manager per server behind the simulator hooks.
class LocalTier : public PowerController, public ClusterObserver {
 public:
  LocalTier(int servers, const LocalConfig& config, const PowerModel& power,
            const CategoryMap& categories, std::shared_ptr<const Predictor> predictor,
            std::uint64_t seed);

  std::optional<double> on_idle(const Server& server, double now) override;
  void on_arrival(const Server& server, double now) override;
  void on_segment(const Server& server, const Segment& segment) override;

  void set_epsilon(double epsilon);
  void set_learning(bool on);
  void set_record_streams(bool on);
  void enable_log(bool on);
  void reset_episode();

  ServerPowerManager& manager(int server_id) { return managers_.at(static_cast<std::size_t>(server_id - 1)); }
  const std::vector<ServerPowerManager>& managers() const { return managers_; }
  const std::vector<DecisionLogEntry>& log() const { return log_; }
  std::vector<std::vector<double>> streams() const;

  void save(neural::Checkpoint& ck, const std::string& prefix) const;
  void load(const neural::Checkpoint& ck, const std::string& prefix);

 private:
  std::vector<ServerPowerManager> managers_;
  std::vector<DecisionLogEntry> log_;
};

/// Wraps any power controller and records per-server inter-arrival times.
class ArrivalStreamRecorder : public PowerController {
 public:
  ArrivalStreamRecorder(int servers, PowerController* inner);
  std::optional<double> on_idle(const Server& server, double now) override;
  void on_arrival(const Server& server, double now) override;
  const std::vector<std::vector<double>>& streams() const { return streams_; }

 private:
  PowerController* inner_;
  std::vector<std::optional<double>> last_;
  std::vector<std::vector<double>> streams_;
};

void write_decision_log(std::ostream& out, const std::vector<DecisionLogEntry>& log);

}  // namespace hrm

#endif  // HRM_LOCAL_TIER_HPP
