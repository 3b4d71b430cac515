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


#include "dpvideo/random.h"

#include <cmath>
#include <set>
#include <vector>

#include "gtest/gtest.h"

namespace dpvideo {
namespace {

// Known-answer vectors from the Random123 distribution (philox4x32, 10
// rounds).
TEST(PhiloxTest, KnownAnswerZero) {
  EXPECT_EQ(Philox4x32({0, 0, 0, 0}, {0, 0}),
            (PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
}

TEST(PhiloxTest, KnownAnswerAllOnes) {
  EXPECT_EQ(Philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                       {0xffffffff, 0xffffffff}),
            (PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
}

TEST(PhiloxTest, KnownAnswerPi) {
  EXPECT_EQ(Philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                       {0xa4093822, 0x299f31d0}),
            (PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(CounterRngTest, DeterministicAndStreamSeparated) {
  CounterRng a(42, Stream::kTest);
  CounterRng b(42, Stream::kTest);
  CounterRng c(42, Stream::kInit);
  CounterRng d(43, Stream::kTest);
  EXPECT_EQ(a.Normal(7, 3), b.Normal(7, 3));
  EXPECT_NE(a.Bits(7, 3), c.Bits(7, 3));
  EXPECT_NE(a.Bits(7, 3), d.Bits(7, 3));
  EXPECT_NE(a.Bits(7, 3), a.Bits(8, 3));
  EXPECT_NE(a.Bits(7, 3, 0), a.Bits(7, 3, 1));
}

TEST(CounterRngTest, UniformInUnitInterval) {
  CounterRng rng(1, Stream::kTest);
  for (std::uint32_t i = 0; i < 10000; ++i) {
    const double u = rng.Uniform(0, i);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(PhiloxEngineTest, BelowStaysInRange) {
  PhiloxEngine rng(5, Stream::kTest);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const std::uint64_t v = rng.Below(7);
    ASSERT_LT(v, 7u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 7u);
  EXPECT_EQ(rng.Below(1), 0u);
}

TEST(PhiloxEngineTest, StartOffsetSkipsAhead) {
  PhiloxEngine a(9, Stream::kTest, 2);
  a();
  a();
  PhiloxEngine b(9, Stream::kTest, 2, 2);
  EXPECT_EQ(a(), b());
  EXPECT_EQ(a.position(), 3u);
}

}  // namespace
}  // namespace dpvideo
