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

#ifndef DPVIDEO_MODEL_H_
#define DPVIDEO_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpvideo/dataset.h"
#include "dpvideo/param_store.h"
#include "dpvideo/tape.h"

namespace dpvideo {

// Normalization applied after each hidden dense layer. There is no batch
// normalization: batch statistics couple the samples of a minibatch, which
// breaks per-sample gradient clipping.
struct NormSpec {
  enum class Kind { kNone, kLayerNorm, kGroupNorm };
  Kind kind = Kind::kLayerNorm;
  std::size_t groups = 1;

  static NormSpec None() { return {Kind::kNone, 1}; }
  static NormSpec LayerNorm() { return {Kind::kLayerNorm, 1}; }
  static NormSpec GroupNorm(std::size_t groups) {
    return {Kind::kGroupNorm, groups};
  }
  // Accepts "none", "layer", "group:<g>". "batch" is rejected.
  static NormSpec Parse(const std::string& text);
  std::string ToString() const;

  friend bool operator==(const NormSpec&, const NormSpec&) = default;
};

inline constexpr double kNormEpsilon = 1e-5;

struct ModelConfig {
  std::size_t input_dim = 32;
  std::size_t frames_per_clip = 8;
  std::vector<std::size_t> hidden_dims = {64};
  NormSpec norm = NormSpec::LayerNorm();
  std::size_t num_classes = 10;

  void Validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct AdapterSpec {
  std::size_t bottleneck_dim = 8;
};

// Per-frame MLP encoder, temporal mean-pool, linear head:
//   for each hidden i: h = relu(norm(h W_i + b_i)) [+ adapter_i(h)]
//   logits = mean_frames(h) W_head + b_head
// The tape takes inputs "clip" [frames_per_clip x input_dim] and
// "label" [1].
struct Model {
  ModelConfig config;
  std::optional<AdapterSpec> adapters;
  Tape tape;
  ParameterStore params;
};

inline constexpr char kClipInput[] = "clip";
inline constexpr char kLabelInput[] = "label";

// Deterministic in `seed`. Throws InvalidArgumentError for invalid configs
// (zero sizes, group count not dividing a hidden width).
Model BuildModel(const ModelConfig& config, std::uint64_t seed);

// Records the tape for `config`, with adapters when given. Parameter
// values are not touched.
Tape BuildTape(const ModelConfig& config,
               const std::optional<AdapterSpec>& adapters);

// Draws fresh initial values for every parameter of `store`, keyed by
// parameter name so the result does not depend on store order.
void InitializeParameters(ParameterStore& store, std::uint64_t seed);

// Adds a residual bottleneck MLP after every hidden block:
//   h + relu(h D + d) U + u, with U and u zero
// so the model output is unchanged. New parameters are named
// "adapter{i}.{down,up}.{weight,bias}" and start trainable.
Model InsertAdapters(const Model& model, const AdapterSpec& spec,
                     std::uint64_t seed);

std::size_t AdapterParameterCount(std::size_t width, std::size_t bottleneck);

NamedTensors ClipInputs(const Tensor& clip, std::uint32_t label);

Tensor ClipLogits(const Model& model, const Tensor& clip);

// Logits averaged over all clips of the video.
std::vector<double> VideoLogits(const Model& model, const VideoSample& video);

// argmax of VideoLogits, ties toward the lowest class index.
std::uint32_t PredictVideo(const Model& model, const VideoSample& video);

std::uint32_t ArgMax(std::span<const double> values);

// "DPVM" checkpoint: magic, version u32, then until end of file per
// parameter: name length u32, name bytes, rank u32, rank x u64 dims,
// little-endian f64 payload. Trainable flags are not stored.
std::string SerializeCheckpoint(const ParameterStore& store);
ParameterStore DeserializeCheckpoint(std::string_view bytes);
void SaveCheckpoint(const ParameterStore& store, const std::string& path);
ParameterStore LoadCheckpoint(const std::string& path);

// Copies checkpoint values into `store`. Every non-adapter parameter of
// the store must be present with the same shape, and the checkpoint may
// not carry names the store lacks; otherwise InvalidArgumentError.
void LoadWeightsInto(ParameterStore& store, const ParameterStore& checkpoint);

}  // namespace dpvideo

#endif  // DPVIDEO_MODEL_H_
