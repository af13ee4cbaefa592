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

// Named parameter tensors. Networks hold a shared_ptr to a store, so two
// networks built over the same store are the same weights: an update through
// one is visible through the other.

#ifndef HRM_NEURAL_PARAMS_HPP
#define HRM_NEURAL_PARAMS_HPP

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hrm/common.hpp"

namespace hrm::neural {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
class ParamStore {
 public:
  /// Appends a tensor and returns its index.
  std::size_t add(std::string name, Matrix<Scalar> value) {
    names_.push_back(std::move(name));
    tensors_.push_back(std::move(value));
    return tensors_.size() - 1;
  }

  std::size_t size() const { return tensors_.size(); }
  Matrix<Scalar>& operator[](std::size_t i) { return tensors_[i]; }
  const Matrix<Scalar>& operator[](std::size_t i) const { return tensors_[i]; }
  const std::string& name(std::size_t i) const { return names_[i]; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += static_cast<std::size_t>(t.size());
    return n;
  }

  /// Zero-valued tensors with the same shapes, for gradient accumulation.
  std::vector<Matrix<Scalar>> zeros_like() const {
    std::vector<Matrix<Scalar>> out;
    out.reserve(tensors_.size());
    for (const auto& t : tensors_) out.push_back(Matrix<Scalar>::Zero(t.rows(), t.cols()));
    return out;
  }

  bool all_finite() const {
    for (const auto& t : tensors_)
      if (!t.allFinite()) return false;
    return true;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Matrix<Scalar>> tensors_;
};

template <typename Scalar>
using Gradients = std::vector<Matrix<Scalar>>;

template <typename Scalar>
using StorePtr = std::shared_ptr<ParamStore<Scalar>>;

template <typename Scalar>
Scalar global_norm(const Gradients<Scalar>& grads) {
  Scalar sq = 0;
  for (const auto& g : grads) sq += g.squaredNorm();
  return std::sqrt(sq);
}

/// Rescales all gradients by max_norm / norm when the global L2 norm exceeds
/// max_norm. Returns the norm before clipping.
template <typename Scalar>
Scalar clip_gradients(Gradients<Scalar>& grads, Scalar max_norm) {
  if (!(max_norm > 0)) throw DomainError("clip norm must be positive");
  const Scalar norm = global_norm(grads);
  if (norm > max_norm) {
    const Scalar scale = max_norm / norm;
    for (auto& g : grads) g *= scale;
  }
  return norm;
}

template <typename Scalar>
void add_into(Gradients<Scalar>& acc, const Gradients<Scalar>& g) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
}

}  // namespace hrm::neural

#endif  // HRM_NEURAL_PARAMS_HPP
