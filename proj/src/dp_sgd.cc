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

#include "dpvideo/dp_sgd.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "dpvideo/random.h"
#include "dpvideo/status.h"

namespace dpvideo {

void NoiseConfig::Validate() const {
  if (!(clip_norm > 0.0)) {
    throw InvalidArgumentError("clip norm C must be > 0");
  }
  if (!(noise_multiplier >= 0.0) || !std::isfinite(noise_multiplier)) {
    throw InvalidArgumentError("noise multiplier must be finite and >= 0");
  }
}

GradVector ClipGradient(GradVector g, double clip_norm) {
  if (!(clip_norm > 0.0)) {
    throw InvalidArgumentError("clip norm C must be > 0");
  }
  const double norm = L2Norm(g);
  const double factor = std::max(1.0, norm / clip_norm);
  if (factor == 1.0) return g;
  for (double& v : g) v /= factor;
  return g;
}

GradVector GaussianNoise(std::size_t dim, const NoiseConfig& cfg,
                         std::uint64_t step_id) {
  cfg.Validate();
  GradVector z(dim, 0.0);
  if (cfg.noise_multiplier == 0.0) return z;
  const double stddev = cfg.noise_multiplier * cfg.clip_norm;
  const CounterRng rng(cfg.seed, Stream::kGradientNoise);
  for (std::size_t j = 0; j < dim; ++j) {
    z[j] = stddev * rng.Normal(step_id, static_cast<std::uint32_t>(j));
  }
  return z;
}

GradVector NoisyAggregate(std::span<const GradVector> clipped,
                          const NoiseConfig& cfg, std::uint64_t step_id) {
  if (clipped.empty()) {
    throw InvalidArgumentError("noisy aggregation needs at least one gradient");
  }
  const std::size_t dim = clipped.front().size();
  GradVector sum(dim, 0.0);
  for (const GradVector& g : clipped) {
    if (g.size() != dim) {
      throw InvalidArgumentError("gradients to aggregate differ in length");
    }
    for (std::size_t j = 0; j < dim; ++j) sum[j] += g[j];
  }
  if (cfg.noise_multiplier > 0.0) {
    const GradVector z = GaussianNoise(dim, cfg, step_id);
    for (std::size_t j = 0; j < dim; ++j) sum[j] += z[j];
  } else {
    cfg.Validate();
  }
  const double batch = static_cast<double>(clipped.size());
  for (double& v : sum) v /= batch;
  return sum;
}

GradVector MeanGradient(std::span<const GradVector> grads) {
  if (grads.empty()) {
    throw InvalidArgumentError("cannot average zero gradients");
  }
  GradVector mean = grads.front();
  for (std::size_t k = 1; k < grads.size(); ++k) {
    if (grads[k].size() != mean.size()) {
      throw InvalidArgumentError("gradients to average differ in length");
    }
    const double count = static_cast<double>(k + 1);
    for (std::size_t j = 0; j < mean.size(); ++j) {
      mean[j] += (grads[k][j] - mean[j]) / count;
    }
  }
  return mean;
}

StepResult DpSgdStep(Model& model, std::span<const ClipExample> batch,
                     const NoiseConfig& cfg, double lr, std::uint64_t step_id,
                     int workers) {
  cfg.Validate();
  if (batch.empty()) {
    throw InvalidArgumentError("DP-SGD step needs a non-empty batch");
  }
  std::vector<NamedTensors> inputs;
  inputs.reserve(batch.size());
  for (const ClipExample& ex : batch) {
    inputs.push_back(ClipInputs(ex.clip, ex.label));
  }
  PerSampleGradients per_sample =
      BackwardPerSample(model.tape, inputs, model.params, workers);
  for (GradVector& g : per_sample.grads) {
    g = ClipGradient(std::move(g), cfg.clip_norm);
  }
  StepResult result;
  result.update = NoisyAggregate(per_sample.grads, cfg, step_id);
  result.examples = batch.size();
  result.clips = batch.size();
  result.mean_loss =
      std::accumulate(per_sample.losses.begin(), per_sample.losses.end(), 0.0) /
      static_cast<double>(batch.size());
  model.params.ApplyUpdate(result.update, lr);
  return result;
}

VideoGradients ClippedVideoGradients(const Model& model,
                                     std::span<const VideoExample> batch,
                                     double clip_norm, int workers) {
  // Flatten every clip of every video into one batch, ordered by
  // (video, clip index), so per-sample work parallelizes uniformly.
  std::vector<NamedTensors> inputs;
  std::vector<std::size_t> offsets;
  offsets.reserve(batch.size() + 1);
  for (std::size_t v = 0; v < batch.size(); ++v) {
    const VideoExample& video = batch[v];
    if (video.clips.empty()) {
      throw InvalidArgumentError("video " + std::to_string(v) +
                                 " in the batch has no sampled clips");
    }
    std::vector<const Clip*> ordered;
    for (const Clip& c : video.clips) ordered.push_back(&c);
    std::sort(ordered.begin(), ordered.end(),
              [](const Clip* a, const Clip* b) { return a->index < b->index; });
    offsets.push_back(inputs.size());
    for (const Clip* c : ordered) {
      inputs.push_back(ClipInputs(c->frames, video.label));
    }
  }
  offsets.push_back(inputs.size());

  VideoGradients out;
  if (batch.empty()) return out;
  PerSampleGradients per_clip =
      BackwardPerSample(model.tape, inputs, model.params, workers);
  out.clip_losses = std::move(per_clip.losses);
  out.clipped.reserve(batch.size());
  for (std::size_t v = 0; v < batch.size(); ++v) {
    std::span<const GradVector> clips(per_clip.grads.begin() + offsets[v],
                                      per_clip.grads.begin() + offsets[v + 1]);
    out.clipped.push_back(ClipGradient(MeanGradient(clips), clip_norm));
  }
  return out;
}

StepResult MultiClipStep(Model& model, std::span<const VideoExample> batch,
                         const NoiseConfig& cfg, double lr,
                         std::uint64_t step_id, int workers) {
  cfg.Validate();
  if (batch.empty()) {
    throw InvalidArgumentError("multi-clip step needs a non-empty batch");
  }
  VideoGradients grads =
      ClippedVideoGradients(model, batch, cfg.clip_norm, workers);
  StepResult result;
  result.update = NoisyAggregate(grads.clipped, cfg, step_id);
  result.examples = batch.size();
  result.clips = grads.clip_losses.size();
  result.mean_loss = std::accumulate(grads.clip_losses.begin(),
                                     grads.clip_losses.end(), 0.0) /
                     static_cast<double>(result.clips);
  model.params.ApplyUpdate(result.update, lr);
  return result;
}

}  // namespace dpvideo
