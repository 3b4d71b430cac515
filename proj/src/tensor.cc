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

#include "dpvideo/tensor.h"

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <sstream>
#include <utility>

#include "dpvideo/status.h"

namespace dpvideo {

std::size_t NumElements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string ShapeToString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

void CheckShape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have rank >= 1");
  for (std::size_t d : shape) {
    if (d == 0) {
      throw ShapeError("tensor dimensions must be positive, got " +
                       ShapeToString(shape));
    }
  }
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  CheckShape(shape_);
  data_.assign(NumElements(shape_), fill);
  cols_ = shape_.size() == 1 ? shape_[0] : data_.size() / shape_[0];
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  CheckShape(shape_);
  if (data_.size() != NumElements(shape_)) {
    throw ShapeError("tensor payload has " + std::to_string(data_.size()) +
                     " values but shape " + ShapeToString(shape_) +
                     " needs " + std::to_string(NumElements(shape_)));
  }
  cols_ = shape_.size() == 1 ? shape_[0] : data_.size() / shape_[0];
}

Tensor Tensor::Matrix(std::size_t rows, std::size_t cols,
                      std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

bool Tensor::AllFinite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::Fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool operator==(const Tensor& a, const Tensor& b) {
  if (a.shape_ != b.shape_) return false;
  for (std::size_t i = 0; i < a.data_.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a.data_[i]) !=
        std::bit_cast<std::uint64_t>(b.data_[i])) {
      return false;
    }
  }
  return true;
}

Tensor MatMul(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul inner dimensions differ: " +
                     ShapeToString(a.shape()) + " * " +
                     ShapeToString(b.shape()));
  }
  Tensor out({n, m});
  const double* pa = a.values().data();
  const double* pb = b.values().data();
  double* po = out.values().data();
  for (std::size_t i = 0; i < n; ++i) {
    double* row = po + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      const double* brow = pb + p * m;
      for (std::size_t j = 0; j < m; ++j) row[j] += av * brow[j];
    }
  }
  return out;
}

Tensor ConcatRows(std::span<const Tensor> blocks) {
  if (blocks.empty()) throw ShapeError("cannot concatenate zero blocks");
  const std::size_t cols = blocks.front().cols();
  std::size_t rows = 0;
  std::vector<double> data;
  for (const Tensor& b : blocks) {
    if (b.cols() != cols) {
      throw ShapeError("concatenated blocks have different widths");
    }
    rows += b.rows();
    data.insert(data.end(), b.values().begin(), b.values().end());
  }
  return Tensor({rows, cols}, std::move(data));
}

Tensor SliceRows(const Tensor& t, std::size_t begin, std::size_t end) {
  if (begin >= end || end > t.rows()) {
    throw ShapeError("row slice out of range for " + ShapeToString(t.shape()));
  }
  const std::size_t cols = t.cols();
  std::vector<double> data(t.values().begin() + begin * cols,
                           t.values().begin() + end * cols);
  return Tensor({end - begin, cols}, std::move(data));
}

double L2Norm(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

}  // namespace dpvideo
