// Copyright 2026 The Econet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ECONET_TENSOR_H_
#define ECONET_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace econet {

using Shape = std::vector<size_t>;

// Raised when operand shapes do not agree. The message names every shape
// involved so that the caller can locate the offending op.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised for invalid op configuration (even conv windows, bad eps, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string shape_string(const Shape &shape);

// Dense row-major array of doubles. Rank-2 tensors are the common case; a
// sequence of length n with d features is an n x d matrix.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor({1, 1}, {v}); }
  static Tensor row(std::vector<double> v);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor identity(size_t n);

  const Shape &shape() const { return shape_; }
  size_t rank() const { return shape_.size(); }
  size_t size() const { return data_.size(); }
  size_t dim(size_t axis) const { return shape_.at(axis); }
  size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double> &storage() { return data_; }
  const std::vector<double> &storage() const { return data_; }

  double &operator[](size_t i) { return data_[i]; }
  const double &operator[](size_t i) const { return data_[i]; }
  double &operator()(size_t r, size_t c) { return data_[r * shape_[1] + c]; }
  const double &operator()(size_t r, size_t c) const { return data_[r * shape_[1] + c]; }

  std::span<const double> row_span(size_t r) const {
    return std::span<const double>(data_).subspan(r * cols(), cols());
  }

  // Scalar value of a one-element tensor.
  double item() const;

  bool all_finite() const;
  bool operator==(const Tensor &other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

size_t shape_product(const Shape &shape);

// Seeded uniform(-r, r) initialization with r = sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Shape shape, size_t fan_in, size_t fan_out, uint64_t seed);

}  // namespace econet

#endif  // ECONET_TENSOR_H_
