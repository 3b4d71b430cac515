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

#include <cmath>
#include <limits>
#include <vector>

#include "dpvideo/status.h"
#include "gtest/gtest.h"

namespace dpvideo {
namespace {

TEST(TensorTest, ConstructsWithFill) {
  Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  for (double v : t.data()) EXPECT_EQ(v, 1.5);
}

TEST(TensorTest, RankOneIsSingleRow) {
  Tensor t({4});
  EXPECT_EQ(t.rows(), 1u);
  EXPECT_EQ(t.cols(), 4u);
}

TEST(TensorTest, RejectsBadShapes) {
  EXPECT_THROW(Tensor(Shape{}), ShapeError);
  EXPECT_THROW(Tensor(Shape{2, 0}), ShapeError);
  EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST(TensorTest, MatMulMatchesHandComputation) {
  Tensor a = Tensor::Matrix(2, 3, {1, 2, 3, 4, 5, 6});
  Tensor b = Tensor::Matrix(3, 2, {7, 8, 9, 10, 11, 12});
  Tensor c = MatMul(a, b);
  EXPECT_EQ(c.shape(), (Shape{2, 2}));
  EXPECT_EQ(c.values(), (std::vector<double>{58, 64, 139, 154}));
}

TEST(TensorTest, MatMulRejectsMismatch) {
  EXPECT_THROW(MatMul(Tensor({2, 3}), Tensor({2, 3})), ShapeError);
}

TEST(TensorTest, ConcatAndSliceRoundTrip) {
  Tensor t = Tensor::Matrix(3, 2, {1, 2, 3, 4, 5, 6});
  std::vector<Tensor> parts = {SliceRows(t, 0, 1), SliceRows(t, 1, 3)};
  EXPECT_EQ(parts[1].shape(), (Shape{2, 2}));
  EXPECT_EQ(ConcatRows(parts), t);
  EXPECT_THROW(SliceRows(t, 2, 4), ShapeError);
}

TEST(TensorTest, EqualityIsBitwise) {
  Tensor a({1}, 0.0);
  Tensor b({1}, -0.0);
  EXPECT_FALSE(a == b);
  EXPECT_TRUE(a == Tensor({1}, 0.0));
  EXPECT_FALSE(Tensor({2, 1}) == Tensor({1, 2}));
}

TEST(TensorTest, AllFiniteDetectsNanAndInf) {
  Tensor t({3}, 1.0);
  EXPECT_TRUE(t.AllFinite());
  t[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(t.AllFinite());
  t[1] = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(t.AllFinite());
}

TEST(TensorTest, L2Norm) {
  std::vector<double> v = {3, 4};
  EXPECT_EQ(L2Norm(v), 5.0);
  EXPECT_EQ(L2Norm(std::vector<double>{}), 0.0);
}

TEST(TensorTest, ShapeToString) {
  EXPECT_EQ(ShapeToString({8, 32}), "[8x32]");
  EXPECT_EQ(NumElements({8, 32}), 256u);
}

}  // namespace
}  // namespace dpvideo
