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

#ifndef HRM_NEURAL_LSTM_HPP
#define HRM_NEURAL_LSTM_HPP

#include <cmath>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hrm/neural/params.hpp"

namespace hrm::neural {

/// Scalar-in, scalar-out sequence regressor: a linear input layer, one LSTM
/// cell unrolled over a fixed look-back with shared weights, and a linear
/// output layer read from the final hidden state.
///
/// Store layout: input.weight (H x 1), input.bias (H), gates.weight
/// (4H x 2H, rows ordered input/forget/output/candidate, columns
/// [projected input, previous hidden]), gates.bias (4H), output.weight (1 x H),
/// output.bias (1).
template <typename Scalar>
class LstmRegressor {
 public:
  static constexpr int kLookBack = 35;
  static constexpr int kHidden = 30;

  enum Tensor : std::size_t { kInW = 0, kInB, kGateW, kGateB, kOutW, kOutB, kTensorCount };

  struct Step {
    Scalar x;
    Vector<Scalar> z, h_prev, c_prev, i, f, o, g, c, h;
  };
  struct Cache {
    std::vector<Step> steps;
    Scalar output = 0;
  };

  LstmRegressor() = default;

  /// Input and output layers draw from N(0, 1) with bias 0.1; gate weights
  /// use scaled-uniform fan-in with zero bias.
  static LstmRegressor create(Rng& rng, int hidden = kHidden, int look_back = kLookBack) {
    LstmRegressor m;
    m.hidden_ = hidden;
    m.look_back_ = look_back;
    m.store_ = std::make_shared<ParamStore<Scalar>>();
    std::normal_distribution<double> normal(0.0, 1.0);
    const double bound = 1.0 / std::sqrt(2.0 * hidden);
    std::uniform_real_distribution<double> uniform(-bound, bound);
    auto fill = [&](Matrix<Scalar> mat, auto& dist) {
      for (Eigen::Index k = 0; k < mat.size(); ++k) mat.data()[k] = Scalar(dist(rng));
      return mat;
    };
    m.store_->add("input.weight", fill(Matrix<Scalar>(hidden, 1), normal));
    m.store_->add("input.bias", Matrix<Scalar>::Constant(hidden, 1, Scalar(0.1)));
    m.store_->add("gates.weight", fill(Matrix<Scalar>(4 * hidden, 2 * hidden), uniform));
    m.store_->add("gates.bias", Matrix<Scalar>::Zero(4 * hidden, 1));
    m.store_->add("output.weight", fill(Matrix<Scalar>(1, hidden), normal));
    m.store_->add("output.bias", Matrix<Scalar>::Constant(1, 1, Scalar(0.1)));
    return m;
  }

  /// Copy with its own parameter store.
  LstmRegressor clone() const {
    LstmRegressor m = *this;
    m.store_ = std::make_shared<ParamStore<Scalar>>(*store_);
    return m;
  }

  int hidden_size() const { return hidden_; }
  int look_back() const { return look_back_; }
  const StorePtr<Scalar>& store() const { return store_; }
  void set_store(StorePtr<Scalar> store) { store_ = std::move(store); }

  Scalar forward(std::span<const Scalar> sequence, Cache* cache = nullptr) const {
    if (static_cast<int>(sequence.size()) != look_back_)
      throw DomainError("sequence length " + std::to_string(sequence.size()) + ", expected " +
                        std::to_string(look_back_));
    const auto& p = *store_;
    const int H = hidden_;
    Vector<Scalar> h = Vector<Scalar>::Zero(H), c = Vector<Scalar>::Zero(H);
    Vector<Scalar> xh(2 * H);
    if (cache) cache->steps.clear();
    for (Scalar x : sequence) {
      Step s;
      s.x = x;
      s.z = p[kInW].col(0) * x + p[kInB].col(0);
      xh << s.z, h;
      const Vector<Scalar> a = p[kGateW] * xh + p[kGateB].col(0);
      s.i = sigmoid(a.segment(0, H));
      s.f = sigmoid(a.segment(H, H));
      s.o = sigmoid(a.segment(2 * H, H));
      s.g = a.segment(3 * H, H).array().tanh().matrix();
      s.c_prev = c;
      s.h_prev = h;
      c = s.f.cwiseProduct(c) + s.i.cwiseProduct(s.g);
      h = s.o.cwiseProduct(c.array().tanh().matrix());
      s.c = c;
      s.h = h;
      if (cache) cache->steps.push_back(std::move(s));
    }
    const Scalar y = (p[kOutW] * h)(0, 0) + p[kOutB](0, 0);
    if (cache) cache->output = y;
    return y;
  }

  /// Backpropagation through every unrolled step for an output gradient
  /// dy; accumulates into grads.
  void backward(const Cache& cache, Scalar dy, Gradients<Scalar>& grads) const {
    const auto& p = *store_;
    const int H = hidden_;
    const auto& last = cache.steps.back();
    grads[kOutW] += dy * last.h.transpose();
    grads[kOutB](0, 0) += dy;
    Vector<Scalar> dh = p[kOutW].row(0).transpose() * dy;
    Vector<Scalar> dc = Vector<Scalar>::Zero(H);
    Vector<Scalar> da(4 * H), xh(2 * H);
    for (auto it = cache.steps.rbegin(); it != cache.steps.rend(); ++it) {
      const Step& s = *it;
      const Vector<Scalar> tc = s.c.array().tanh().matrix();
      const Vector<Scalar> d_o = dh.cwiseProduct(tc);
      dc += dh.cwiseProduct(s.o).cwiseProduct((Scalar(1) - tc.array().square()).matrix());
      da.segment(0, H) = dc.cwiseProduct(s.g).cwiseProduct(sigmoid_grad(s.i));
      da.segment(H, H) = dc.cwiseProduct(s.c_prev).cwiseProduct(sigmoid_grad(s.f));
      da.segment(2 * H, H) = d_o.cwiseProduct(sigmoid_grad(s.o));
      da.segment(3 * H, H) =
          dc.cwiseProduct(s.i).cwiseProduct((Scalar(1) - s.g.array().square()).matrix());
      xh << s.z, s.h_prev;
      grads[kGateW].noalias() += da * xh.transpose();
      grads[kGateB].col(0) += da;
      const Vector<Scalar> dxh = p[kGateW].transpose() * da;
      const auto dz = dxh.segment(0, H);
      grads[kInW].col(0) += dz * s.x;
      grads[kInB].col(0) += dz;
      dc = dc.cwiseProduct(s.f);
      dh = dxh.segment(H, H);
    }
  }

  /// Half squared error against target, with gradients accumulated.
  Scalar loss_and_gradient(std::span<const Scalar> sequence, Scalar target,
                           Gradients<Scalar>& grads) const {
    Cache cache;
    const Scalar y = forward(sequence, &cache);
    backward(cache, y - target, grads);
    return Scalar(0.5) * (y - target) * (y - target);
  }

 private:
  static Vector<Scalar> sigmoid(const auto& a) {
    return (Scalar(1) / (Scalar(1) + (-a.array()).exp())).matrix();
  }
  static Vector<Scalar> sigmoid_grad(const Vector<Scalar>& s) {
    return s.cwiseProduct((Scalar(1) - s.array()).matrix());
  }

  int hidden_ = kHidden;
  int look_back_ = kLookBack;
  StorePtr<Scalar> store_;
};

}  // namespace hrm::neural

#endif  // HRM_NEURAL_LSTM_HPP
