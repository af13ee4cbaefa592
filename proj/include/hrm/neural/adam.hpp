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

#ifndef HRM_NEURAL_ADAM_HPP
#define HRM_NEURAL_ADAM_HPP

#include <cmath>

#include "hrm/neural/params.hpp"

namespace hrm::neural {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction over every tensor of one parameter store.
template <typename Scalar>
class Adam {
 public:
  Adam() = default;
  Adam(const ParamStore<Scalar>& store, AdamConfig config)
      : config_(config), m_(store.zeros_like()), v_(store.zeros_like()) {}

  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  long step_count() const { return t_; }
  const Gradients<Scalar>& first_moment() const { return m_; }
  const Gradients<Scalar>& second_moment() const { return v_; }

  void step(ParamStore<Scalar>& store, const Gradients<Scalar>& grads) {
    if (grads.size() != store.size() || m_.size() != store.size())
      throw DomainError("gradient list does not match parameter store");
    ++t_;
    const Scalar b1 = Scalar(config_.beta1), b2 = Scalar(config_.beta2);
    const Scalar c1 = Scalar(1) - std::pow(b1, Scalar(t_));
    const Scalar c2 = Scalar(1) - std::pow(b2, Scalar(t_));
    const Scalar lr = Scalar(config_.learning_rate), eps = Scalar(config_.epsilon);
    for (std::size_t i = 0; i < store.size(); ++i) {
      m_[i] = b1 * m_[i] + (Scalar(1) - b1) * grads[i];
      v_[i] = b2 * v_[i] + (Scalar(1) - b2) * grads[i].cwiseAbs2();
      store[i].array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps);
    }
  }

 private:
  AdamConfig config_;
  Gradients<Scalar> m_, v_;
  long t_ = 0;
};

}  // namespace hrm::neural

#endif  // HRM_NEURAL_ADAM_HPP
