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

#ifndef DPVIDEO_RANDOM_H_
#define DPVIDEO_RANDOM_H_

#include <array>
#include <cstdint>
#include <limits>

namespace dpvideo {

// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as
// 1, 2, 3"). A keyed bijection on 128-bit counters: every draw is a pure
// function of (key, counter), so streams can be addressed directly by
// (seed, step, coordinate) without any sequential state.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter Philox4x32(PhiloxCounter counter, PhiloxKey key);

// Stream domains. Each consumer of randomness claims one tag so that
// streams never overlap for the same seed.
enum class Stream : std::uint32_t {
  kGradientNoise = 1,
  kInit = 2,
  kTemplates = 3,
  kPixelNoise = 4,
  kPoissonSampling = 5,
  kClipSampling = 6,
  kMinibatch = 7,
  kTest = 99,
};

// Addresses a single 128-bit block by (seed, stream, a, b).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, Stream stream)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        stream_(static_cast<std::uint32_t>(stream)) {}

  // 64 uniform bits for index pair (a, b); `lane` selects which half of
  // the 128-bit block.
  std::uint64_t Bits(std::uint64_t a, std::uint32_t b, int lane = 0) const;

  // Uniform double in [0, 1) with 53 random bits.
  double Uniform(std::uint64_t a, std::uint32_t b) const;

  // Standard normal draw via Box-Muller from one counter block.
  double Normal(std::uint64_t a, std::uint32_t b) const;

 private:
  PhiloxKey key_;
  std::uint32_t stream_;
};

// Sequential engine over a counter stream. Satisfies
// UniformRandomBitGenerator; two engines built from the same
// (seed, stream, substream) produce the same sequence.
class PhiloxEngine {
 public:
  using result_type = std::uint64_t;

  PhiloxEngine(std::uint64_t seed, Stream stream, std::uint32_t substream = 0,
               std::uint64_t start = 0)
      : rng_(seed, stream), substream_(substream), position_(start) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return rng_.Bits(position_++, substream_); }

  // Uniform integer in [0, bound) by rejection; identical on every
  // platform, unlike std::uniform_int_distribution.
  std::uint64_t Below(std::uint64_t bound);
  double Uniform() { return rng_.Uniform(position_++, substream_); }
  double Normal() { return rng_.Normal(position_++, substream_); }

  std::uint64_t position() const { return position_; }

 private:
  CounterRng rng_;
  std::uint32_t substream_;
  std::uint64_t position_;
};

}  // namespace dpvideo

#endif  // DPVIDEO_RANDOM_H_
