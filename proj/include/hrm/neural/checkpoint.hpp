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

// Versioned text checkpoint of named tensors.
//
//   hrm-checkpoint 1
//   tensors <count>
//   <name> <rows> <cols>
//   <rows*cols values, row-major, space separated, shortest round-trip form>
//   ... (one header line and one value line per tensor)
//
// Names contain no whitespace. Values parse back bit-exactly.

#ifndef HRM_NEURAL_CHECKPOINT_HPP
#define HRM_NEURAL_CHECKPOINT_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "hrm/neural/params.hpp"

namespace hrm::neural {

inline constexpr int kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Matrix<double> value;
};

class Checkpoint {
 public:
  void add(std::string name, Matrix<double> value);
  /// Adds every tensor of store as "<prefix>.<tensor name>".
  void add_store(const std::string& prefix, const ParamStore<double>& store);
  /// Overwrites store tensors from "<prefix>.<tensor name>"; shapes must match.
  void load_store(const std::string& prefix, ParamStore<double>& store) const;

  bool contains(const std::string& name) const;
  const Matrix<double>& get(const std::string& name) const;
  const std::vector<NamedTensor>& tensors() const { return tensors_; }

  void write(std::ostream& out) const;
  static Checkpoint read(std::istream& in);
  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

 private:
  std::vector<NamedTensor> tensors_;
};

}  // namespace hrm::neural

#endif  // HRM_NEURAL_CHECKPOINT_HPP
