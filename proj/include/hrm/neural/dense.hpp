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

#ifndef HRM_NEURAL_DENSE_HPP
#define HRM_NEURAL_DENSE_HPP

#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "hrm/neural/params.hpp"

namespace hrm::neural {

enum class Activation { Linear, Elu };

/// Exponential linear unit with unit alpha.
template <typename Scalar>
Scalar elu(Scalar x) {
  return x > Scalar(0) ? x : std::expm1(x);
}

/// d elu / dx, evaluated from the pre-activation.
template <typename Scalar>
Scalar elu_derivative(Scalar x) {
  return x > Scalar(0) ? Scalar(1) : std::exp(x);
}

struct LayerShape {
  int in = 0;
  int out = 0;
  Activation activation = Activation::Linear;
};

/// Activations recorded by a forward pass; enough for exact gradients.
template <typename Scalar>
struct DenseCache {
  std::vector<Vector<Scalar>> inputs;  // input to each layer
  std::vector<Vector<Scalar>> pre;     // affine output of each layer
  Vector<Scalar> output;
};

/// Fully connected layers y = act(W x + b) composed in sequence. Layer i keeps
/// its weights at store index 2i and bias at 2i+1.
template <typename Scalar>
class DenseStack {
 public:
  DenseStack() = default;

  DenseStack(std::vector<LayerShape> layers, StorePtr<Scalar> store, std::size_t first_index)
      : layers_(std::move(layers)), store_(std::move(store)), first_(first_index) {}

  /// Allocates fresh parameters in store (scaled-uniform fan-in init).
  static DenseStack create(std::vector<LayerShape> layers, StorePtr<Scalar> store,
                           const std::string& prefix, Rng& rng) {
    const std::size_t first = store->size();
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (i > 0 && layers[i - 1].out != l.in)
        throw DomainError("layer " + std::to_string(i) + " input does not match previous output");
      const Scalar bound = Scalar(1) / std::sqrt(Scalar(l.in));
      std::uniform_real_distribution<double> u(-double(bound), double(bound));
      Matrix<Scalar> w(l.out, l.in);
      for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = Scalar(u(rng));
      store->add(prefix + "." + std::to_string(i) + ".weight", std::move(w));
      store->add(prefix + "." + std::to_string(i) + ".bias", Matrix<Scalar>::Zero(l.out, 1));
    }
    return DenseStack(std::move(layers), std::move(store), first);
  }

  int input_size() const { return layers_.front().in; }
  int output_size() const { return layers_.back().out; }
  const std::vector<LayerShape>& layers() const { return layers_; }
  const StorePtr<Scalar>& store() const { return store_; }
  std::size_t first_index() const { return first_; }
  std::size_t tensor_count() const { return 2 * layers_.size(); }

  const Matrix<Scalar>& weights(std::size_t layer) const { return (*store_)[first_ + 2 * layer]; }
  Matrix<Scalar>& weights(std::size_t layer) { return (*store_)[first_ + 2 * layer]; }
  auto bias(std::size_t layer) const { return (*store_)[first_ + 2 * layer + 1].col(0); }
  auto bias(std::size_t layer) { return (*store_)[first_ + 2 * layer + 1].col(0); }

  Vector<Scalar> forward(const Vector<Scalar>& input, DenseCache<Scalar>* cache = nullptr) const {
    if (input.size() != input_size())
      throw DomainError("dense input has length " + std::to_string(input.size()) + ", expected " +
                        std::to_string(input_size()));
    if (cache) {
      cache->inputs.clear();
      cache->pre.clear();
    }
    Vector<Scalar> x = input;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      Vector<Scalar> z = weights(i) * x + bias(i);
      if (cache) {
        cache->inputs.push_back(x);
        cache->pre.push_back(z);
      }
      if (layers_[i].activation == Activation::Elu) z = z.unaryExpr([](Scalar v) { return elu(v); });
      x = std::move(z);
    }
    if (cache) cache->output = x;
    return x;
  }

  /// Accumulates parameter gradients into grads (indexed like the store) and
  /// returns the gradient with respect to the input.
  Vector<Scalar> backward(const DenseCache<Scalar>& cache, const Vector<Scalar>& output_grad,
                          Gradients<Scalar>& grads) const {
    Vector<Scalar> delta = output_grad;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      if (layers_[i].activation == Activation::Elu)
        delta = delta.cwiseProduct(cache.pre[i].unaryExpr([](Scalar v) { return elu_derivative(v); }));
      grads[first_ + 2 * i].noalias() += delta * cache.inputs[i].transpose();
      grads[first_ + 2 * i + 1].col(0) += delta;
      delta = weights(i).transpose() * delta;
    }
    return delta;
  }

 private:
  std::vector<LayerShape> layers_;
  StorePtr<Scalar> store_;
  std::size_t first_ = 0;
};

}  // namespace hrm::neural

#endif  // HRM_NEURAL_DENSE_HPP
