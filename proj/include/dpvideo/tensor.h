// Copyright 2026 The dpvideo Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPVIDEO_TENSOR_H_
#define DPVIDEO_TENSOR_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace dpvideo {

using Shape = std::vector<std::size_t>;

// Dense row-major array of doubles. Every dimension is positive and
// data().size() always equals the product of the shape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Scalar(double value) { return Tensor({1}, {value}); }
  static Tensor Matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Leading extent, and the product of the remaining extents. A rank-1
  // tensor of length n is viewed as a single row of n columns.
  std::size_t rows() const { return cols_ ? data_.size() / cols_ : 0; }
  std::size_t cols() const { return cols_; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  bool AllFinite() const;
  void Fill(double value);

  // Bitwise comparison (shape and every payload bit).
  friend bool operator==(const Tensor& a, const Tensor& b);

 private:
  Shape shape_;
  std::vector<double> data_;
  std::size_t cols_ = 0;
};

std::string ShapeToString(const Shape& shape);
std::size_t NumElements(const Shape& shape);

// out = a * b for a [n x k], b [k x m].
Tensor MatMul(const Tensor& a, const Tensor& b);

// Concatenates row blocks with equal column counts.
Tensor ConcatRows(std::span<const Tensor> blocks);

// Copies rows [begin, end) into a new [end - begin x cols] tensor.
Tensor SliceRows(const Tensor& t, std::size_t begin, std::size_t end);

double L2Norm(std::span<const double> v);

}  // namespace dpvideo

#endif  // DPVIDEO_TENSOR_H_
