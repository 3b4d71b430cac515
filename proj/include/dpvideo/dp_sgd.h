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

#ifndef DPVIDEO_DP_SGD_H_
#define DPVIDEO_DP_SGD_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dpvideo/dataset.h"
#include "dpvideo/model.h"
#include "dpvideo/tape.h"

namespace dpvideo {

struct NoiseConfig {
  // l2 bound C applied to every per-example gradient.
  double clip_norm = 1.0;
  // sigma; noise standard deviation is sigma * C.
  double noise_multiplier = 0.0;
  std::uint64_t seed = 0;

  void Validate() const;
};

// g / max(1, |g|_2 / C). Gradients already inside the ball are returned
// bit-for-bit unchanged.
GradVector ClipGradient(GradVector g, double clip_norm);

// z with i.i.d. N(0, (sigma C)^2) entries; coordinate j of step `step_id`
// is a pure function of (seed, step_id, j).
GradVector GaussianNoise(std::size_t dim, const NoiseConfig& cfg,
                         std::uint64_t step_id);

// (sum_i clipped[i] + z) / B, summed in index order. Throws
// InvalidArgumentError on an empty list or ragged lengths.
GradVector NoisyAggregate(std::span<const GradVector> clipped,
                          const NoiseConfig& cfg, std::uint64_t step_id);

// Element-wise mean by running update m += (g - m) / (j + 1), so that
// identical inputs average to exactly themselves.
GradVector MeanGradient(std::span<const GradVector> grads);

struct ClipExample {
  Tensor clip;
  std::uint32_t label = 0;
};

// K clips sampled from one video. Clips are reduced in ascending index
// order whatever order they are given in.
struct VideoExample {
  std::vector<Clip> clips;
  std::uint32_t label = 0;
};

struct StepResult {
  // Mean loss over every clip that went through the model.
  double mean_loss = 0.0;
  std::size_t examples = 0;
  std::size_t clips = 0;
  // The noisy averaged gradient that was applied.
  GradVector update;
};

// Clip-level DP-SGD: every clip is one privacy unit.
//   params <- params - lr * NoisyAggregate(ClipGradient(grad_i))
// Only trainable parameters change.
StepResult DpSgdStep(Model& model, std::span<const ClipExample> batch,
                     const NoiseConfig& cfg, double lr, std::uint64_t step_id,
                     int workers = 1);

// Per video: mean of its clips' gradients, clipped once. The clipped
// vectors for every video, in batch order, plus the clip losses.
struct VideoGradients {
  std::vector<GradVector> clipped;
  std::vector<double> clip_losses;
};
VideoGradients ClippedVideoGradients(const Model& model,
                                     std::span<const VideoExample> batch,
                                     double clip_norm, int workers = 1);

// Multi-clip DP-SGD: a video is the privacy unit. Its K clip gradients
// are averaged before clipping, so each video contributes one vector of
// norm <= C regardless of K.
StepResult MultiClipStep(Model& model, std::span<const VideoExample> batch,
                         const NoiseConfig& cfg, double lr,
                         std::uint64_t step_id, int workers = 1);

}  // namespace dpvideo

#endif  // DPVIDEO_DP_SGD_H_
