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

#ifndef DPVIDEO_DATASET_H_
#define DPVIDEO_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dpvideo/random.h"
#include "dpvideo/tensor.h"

namespace dpvideo {

// Synthetic video classification task. Class c is a sinusoid with its own
// frequency and phase, traced through a class-specific random 2-D basis
// embedded in `feature_dim` features, plus i.i.d. Gaussian pixel noise.
struct DatasetSpec {
  std::uint32_t num_classes = 10;
  std::uint32_t videos_per_class = 100;
  std::uint32_t frames_per_video = 32;
  std::uint32_t clip_length = 8;
  std::uint32_t feature_dim = 32;
  double noise_std = 0.5;
  // Drives pixel noise.
  std::uint64_t seed = 0;
  // Drives class templates; train and test splits share it.
  std::uint64_t template_seed = 0;
  // Blend weight of an alternative basis mixed into every class template.
  // Nonzero values produce a related "source" domain for pre-training.
  double domain_shift = 0.0;
  // Per-entry standard deviation of the template basis.
  double signal_scale = 0.25;

  // Throws InvalidArgumentError on zero counts, clip_length not dividing
  // frames_per_video, or negative noise.
  void Validate() const;
  std::uint32_t clips_per_video() const {
    return frames_per_video / clip_length;
  }

  friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

struct VideoSample {
  std::uint64_t id = 0;
  std::uint32_t label = 0;
  // [frames x features]
  Tensor frames;

  friend bool operator==(const VideoSample&, const VideoSample&) = default;
};

struct Dataset {
  DatasetSpec spec;
  std::vector<VideoSample> videos;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Noise-free [frames x features] template of class `label`.
Tensor ClassTemplate(const DatasetSpec& spec, std::uint32_t label);

// Balanced: video i has label i % num_classes and id i.
Dataset GenerateDataset(const DatasetSpec& spec);

// Consecutive, non-overlapping [clip_length x features] clips; their row
// concatenation is the original video.
std::vector<Tensor> ChunkVideo(const VideoSample& video,
                               std::size_t clip_length);

struct Clip {
  std::size_t index = 0;
  Tensor frames;
};

// k distinct indices drawn uniformly without replacement from
// [0, num_clips), returned in ascending order.
std::vector<std::size_t> SampleClipIndices(std::size_t num_clips,
                                           std::size_t k, PhiloxEngine& rng);

std::vector<Clip> SampleClips(const VideoSample& video, std::size_t clip_length,
                              std::size_t k, PhiloxEngine& rng);

// Binary "DPVD" container; see SaveDataset in dataset.cc for the layout.
std::string SerializeDataset(const Dataset& dataset);
Dataset DeserializeDataset(std::string_view bytes);
void SaveDataset(const Dataset& dataset, const std::string& path);
Dataset LoadDataset(const std::string& path);

}  // namespace dpvideo

#endif  // DPVIDEO_DATASET_H_
