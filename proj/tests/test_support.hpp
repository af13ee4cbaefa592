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

// Helpers shared by the unit tests.

#ifndef HRM_TEST_SUPPORT_HPP
#define HRM_TEST_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <random>

#include "hrm/neural/params.hpp"

namespace hrm::testing {

inline neural::Vector<double> random_vector(Eigen::Index n, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  neural::Vector<double> v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

/// |a - b| / max(|a|, |b|, 1e-6).
inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

/// Worst relative error between analytic gradients and central differences
/// (h = 1e-5) over every parameter of the store.
template <typename Loss>
double max_fd_error(neural::ParamStore<double>& store, const neural::Gradients<double>& grads,
                    Loss&& loss) {
  constexpr double h = 1e-5;
  double worst = 0;
  for (std::size_t t = 0; t < store.size(); ++t) {
    for (Eigen::Index k = 0; k < store[t].size(); ++k) {
      double& p = store[t].data()[k];
      const double saved = p;
      p = saved + h;
      const double up = loss();
      p = saved - h;
      const double down = loss();
      p = saved;
      worst = std::max(worst, relative_error(grads[t].data()[k], (up - down) / (2 * h)));
    }
  }
  return worst;
}

}  // namespace hrm::testing

#endif  // HRM_TEST_SUPPORT_HPP
