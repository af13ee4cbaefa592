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

#include "hrm/neural/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace hrm::neural {

void Checkpoint::add(std::string name, Matrix<double> value) {
  if (name.empty() || name.find_first_of(" \t\n") != std::string::npos)
    throw DomainError("invalid tensor name '" + name + "'");
  if (contains(name)) throw DomainError("duplicate tensor name '" + name + "'");
  tensors_.push_back({std::move(name), std::move(value)});
}

void Checkpoint::add_store(const std::string& prefix, const ParamStore<double>& store) {
  for (std::size_t i = 0; i < store.size(); ++i) add(prefix + "." + store.name(i), store[i]);
}

void Checkpoint::load_store(const std::string& prefix, ParamStore<double>& store) const {
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& src = get(prefix + "." + store.name(i));
    if (src.rows() != store[i].rows() || src.cols() != store[i].cols())
      throw DomainError("shape mismatch for tensor " + prefix + "." + store.name(i));
    store[i] = src;
  }
}

bool Checkpoint::contains(const std::string& name) const {
  for (const auto& t : tensors_)
    if (t.name == name) return true;
  return false;
}

const Matrix<double>& Checkpoint::get(const std::string& name) const {
  for (const auto& t : tensors_)
    if (t.name == name) return t.value;
  throw DomainError("checkpoint has no tensor '" + name + "'");
}

void Checkpoint::write(std::ostream& out) const {
  out << "hrm-checkpoint " << kCheckpointVersion << "\n";
  out << "tensors " << tensors_.size() << "\n";
  for (const auto& t : tensors_) {
    out << t.name << " " << t.value.rows() << " " << t.value.cols() << "\n";
    for (Eigen::Index r = 0; r < t.value.rows(); ++r)
      for (Eigen::Index c = 0; c < t.value.cols(); ++c) {
        if (r || c) out << ' ';
        out << format_double(t.value(r, c));
      }
    out << "\n";
  }
}

Checkpoint Checkpoint::read(std::istream& in) {
  std::size_t line_no = 0;
  std::string line;
  auto next_line = [&]() -> std::string& {
    if (!std::getline(in, line)) throw ParseError("unexpected end of checkpoint", line_no + 1);
    ++line_no;
    return line;
  };
  {
    std::istringstream hs(next_line());
    std::string magic;
    int version = 0;
    if (!(hs >> magic >> version) || magic != "hrm-checkpoint")
      throw ParseError("not an hrm checkpoint", line_no);
    if (version != kCheckpointVersion)
      throw ParseError("unsupported checkpoint version " + std::to_string(version), line_no);
  }
  std::size_t count = 0;
  {
    std::istringstream cs(next_line());
    std::string key;
    if (!(cs >> key >> count) || key != "tensors") throw ParseError("expected tensor count", line_no);
  }
  Checkpoint ck;
  for (std::size_t k = 0; k < count; ++k) {
    std::istringstream ts(next_line());
    std::string name;
    Eigen::Index rows = 0, cols = 0;
    if (!(ts >> name >> rows >> cols) || rows < 0 || cols < 0)
      throw ParseError("bad tensor header", line_no);
    Matrix<double> value(rows, cols);
    const std::string& values = next_line();
    const char* p = values.data();
    const char* end = values.data() + values.size();
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) {
        while (p < end && *p == ' ') ++p;
        double v = 0;
        auto [q, ec] = std::from_chars(p, end, v);
        if (ec != std::errc()) throw ParseError("bad value in tensor " + name, line_no);
        value(r, c) = v;
        p = q;
      }
    ck.add(std::move(name), std::move(value));
  }
  return ck;
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint " + path);
  write(out);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint " + path);
  return read(in);
}

}  // namespace hrm::neural
