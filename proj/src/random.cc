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
#include <numbers>

#include "dpvideo/status.h"

namespace dpvideo {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53;
constexpr std::uint32_t kMul1 = 0xCD9E8D57;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

inline void MulHiLo(std::uint32_t a, std::uint32_t b, std::uint32_t* hi,
                    std::uint32_t* lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  *hi = static_cast<std::uint32_t>(p >> 32);
  *lo = static_cast<std::uint32_t>(p);
}

inline double ToUnit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace

PhiloxCounter Philox4x32(PhiloxCounter ctr, PhiloxKey key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    MulHiLo(kMul0, ctr[0], &hi0, &lo0);
    MulHiLo(kMul1, ctr[2], &hi1, &lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

std::uint64_t CounterRng::Bits(std::uint64_t a, std::uint32_t b,
                               int lane) const {
  const PhiloxCounter out =
      Philox4x32({static_cast<std::uint32_t>(a),
                  static_cast<std::uint32_t>(a >> 32), b, stream_},
                 key_);
  const int base = lane == 0 ? 0 : 2;
  return (static_cast<std::uint64_t>(out[base + 1]) << 32) | out[base];
}

double CounterRng::Uniform(std::uint64_t a, std::uint32_t b) const {
  return ToUnit(Bits(a, b));
}

double CounterRng::Normal(std::uint64_t a, std::uint32_t b) const {
  const PhiloxCounter out =
      Philox4x32({static_cast<std::uint32_t>(a),
                  static_cast<std::uint32_t>(a >> 32), b, stream_},
                 key_);
  const std::uint64_t w0 = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  const std::uint64_t w1 = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
  // u1 in (0, 1] keeps the logarithm finite.
  const double u1 = 1.0 - ToUnit(w0);
  const double u2 = ToUnit(w1);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t PhiloxEngine::Below(std::uint64_t bound) {
  if (bound == 0) throw InvalidArgumentError("Below() needs a positive bound");
  // 2^64 mod bound; draws below it would bias the modulus.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = (*this)();
    if (r >= threshold) return r % bound;
  }
}

}  // namespace dpvideo
