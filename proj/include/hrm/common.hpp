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

// Error types, seeded random streams and number formatting shared by every
// module.

#ifndef HRM_COMMON_HPP
#define HRM_COMMON_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hrm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (trace rows, config lines, checkpoints).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Value outside its mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment or workload configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A simulation invariant was violated; always a bug.
class InvariantError : public Error {
 public:
  using Error::Error;
};

using Rng = std::mt19937_64;

/// Derives an independent generator for a named purpose from a master seed.
Rng make_stream(std::uint64_t master_seed, std::string_view name);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace hrm

#endif  // HRM_COMMON_HPP
