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

#include "dpvideo/dataset.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <utility>

#include "dpvideo/binary_io.h"
#include "dpvideo/status.h"

namespace dpvideo {
namespace {

constexpr char kMagic[] = "DPVD";
constexpr std::uint32_t kVersion = 1;

// Substream offset for the alternative basis used by domain_shift.
constexpr std::uint32_t kShiftSubstream = 1u << 20;

}  // namespace

void DatasetSpec::Validate() const {
  if (num_classes == 0 || videos_per_class == 0 || frames_per_video == 0 ||
      clip_length == 0 || feature_dim == 0) {
    throw InvalidArgumentError("dataset counts must all be positive");
  }
  if (frames_per_video % clip_length != 0) {
    throw InvalidArgumentError(
        "clip length " + std::to_string(clip_length) +
        " does not divide frames per video " +
        std::to_string(frames_per_video));
  }
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw InvalidArgumentError("noise_std must be finite and >= 0");
  }
  if (!(domain_shift >= 0.0) || !std::isfinite(domain_shift)) {
    throw InvalidArgumentError("domain_shift must be finite and >= 0");
  }
  if (!(signal_scale > 0.0) || !std::isfinite(signal_scale)) {
    throw InvalidArgumentError("signal_scale must be finite and > 0");
  }
}

Tensor ClassTemplate(const DatasetSpec& spec, std::uint32_t label) {
  if (label >= spec.num_classes) {
    throw InvalidArgumentError("class " + std::to_string(label) +
                               " out of range");
  }
  const std::size_t frames = spec.frames_per_video;
  const std::size_t dim = spec.feature_dim;

  PhiloxEngine rng(spec.template_seed, Stream::kTemplates, label);
  const double phase = 2.0 * std::numbers::pi * rng.Uniform();
  // Class c completes c + 1 cycles over the video.
  const double omega = 2.0 * std::numbers::pi * (label + 1) /
                       static_cast<double>(frames);
  std::vector<double> basis(dim * 2);
  for (double& b : basis) b = rng.Normal();
  if (spec.domain_shift > 0.0) {
    PhiloxEngine alt(spec.template_seed, Stream::kTemplates,
                     kShiftSubstream + label);
    const double norm = std::sqrt(1.0 + spec.domain_shift * spec.domain_shift);
    for (double& b : basis) b = (b + spec.domain_shift * alt.Normal()) / norm;
  }

  Tensor out({frames, dim});
  for (std::size_t t = 0; t < frames; ++t) {
    const double s = std::sin(omega * static_cast<double>(t) + phase);
    const double c = std::cos(omega * static_cast<double>(t) + phase);
    for (std::size_t d = 0; d < dim; ++d) {
      out.at(t, d) =
          spec.signal_scale * (basis[2 * d] * s + basis[2 * d + 1] * c);
    }
  }
  return out;
}

Dataset GenerateDataset(const DatasetSpec& spec) {
  spec.Validate();
  std::vector<Tensor> templates;
  for (std::uint32_t c = 0; c < spec.num_classes; ++c) {
    templates.push_back(ClassTemplate(spec, c));
  }
  Dataset out{spec, {}};
  const std::size_t total =
      static_cast<std::size_t>(spec.num_classes) * spec.videos_per_class;
  out.videos.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    VideoSample v;
    v.id = i;
    v.label = static_cast<std::uint32_t>(i % spec.num_classes);
    v.frames = templates[v.label];
    if (spec.noise_std > 0.0) {
      PhiloxEngine noise(spec.seed, Stream::kPixelNoise,
                         static_cast<std::uint32_t>(i));
      for (double& x : v.frames.values()) x += spec.noise_std * noise.Normal();
    }
    out.videos.push_back(std::move(v));
  }
  return out;
}

std::vector<Tensor> ChunkVideo(const VideoSample& video,
                               std::size_t clip_length) {
  const std::size_t frames = video.frames.rows();
  if (clip_length == 0 || frames % clip_length != 0) {
    throw InvalidArgumentError("clip length " + std::to_string(clip_length) +
                               " does not divide " + std::to_string(frames) +
                               " frames");
  }
  std::vector<Tensor> clips;
  for (std::size_t start = 0; start < frames; start += clip_length) {
    clips.push_back(SliceRows(video.frames, start, start + clip_length));
  }
  return clips;
}

std::vector<std::size_t> SampleClipIndices(std::size_t num_clips,
                                           std::size_t k, PhiloxEngine& rng) {
  if (k == 0 || k > num_clips) {
    throw InvalidArgumentError("cannot sample " + std::to_string(k) +
                               " clips from a video with " +
                               std::to_string(num_clips));
  }
  std::vector<std::size_t> pool(num_clips);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  // Partial Fisher-Yates: the first k slots are a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.Below(num_clips - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<Clip> SampleClips(const VideoSample& video, std::size_t clip_length,
                              std::size_t k, PhiloxEngine& rng) {
  const std::size_t frames = video.frames.rows();
  if (clip_length == 0 || frames % clip_length != 0) {
    throw InvalidArgumentError("clip length " + std::to_string(clip_length) +
                               " does not divide " + std::to_string(frames) +
                               " frames");
  }
  std::vector<Clip> clips;
  for (std::size_t idx : SampleClipIndices(frames / clip_length, k, rng)) {
    clips.push_back({idx, SliceRows(video.frames, idx * clip_length,
                                    (idx + 1) * clip_length)});
  }
  return clips;
}

// Layout (little-endian):
//   "DPVD" | version u32
//   num_classes u32 | videos_per_class u32 | frames_per_video u32 |
//   clip_length u32 | feature_dim u32 | noise_std f64 | seed u64 |
//   template_seed u64 | domain_shift f64 | signal_scale f64
//   video_count u64
//   per video: id u64 | label u32 | T u32 | D u32 | T*D f64
std::string SerializeDataset(const Dataset& dataset) {
  const DatasetSpec& s = dataset.spec;
  BinaryWriter w;
  w.Bytes({kMagic, 4});
  w.Put(kVersion);
  w.Put(s.num_classes);
  w.Put(s.videos_per_class);
  w.Put(s.frames_per_video);
  w.Put(s.clip_length);
  w.Put(s.feature_dim);
  w.Put(s.noise_std);
  w.Put(s.seed);
  w.Put(s.template_seed);
  w.Put(s.domain_shift);
  w.Put(s.signal_scale);
  w.Put(static_cast<std::uint64_t>(dataset.videos.size()));
  for (const VideoSample& v : dataset.videos) {
    w.Put(v.id);
    w.Put(v.label);
    w.Put(static_cast<std::uint32_t>(v.frames.rows()));
    w.Put(static_cast<std::uint32_t>(v.frames.cols()));
    w.PutDoubles(v.frames.data());
  }
  return w.buffer();
}

Dataset DeserializeDataset(std::string_view bytes) {
  BinaryReader r(bytes);
  if (r.Bytes(4, "magic") != std::string_view(kMagic, 4)) {
    throw IoError("not a DPVD dataset file (bad magic)");
  }
  const auto version = r.Get<std::uint32_t>("version");
  if (version != kVersion) {
    throw IoError("unsupported DPVD version " + std::to_string(version));
  }
  Dataset out;
  DatasetSpec& s = out.spec;
  s.num_classes = r.Get<std::uint32_t>("num_classes");
  s.videos_per_class = r.Get<std::uint32_t>("videos_per_class");
  s.frames_per_video = r.Get<std::uint32_t>("frames_per_video");
  s.clip_length = r.Get<std::uint32_t>("clip_length");
  s.feature_dim = r.Get<std::uint32_t>("feature_dim");
  s.noise_std = r.Get<double>("noise_std");
  s.seed = r.Get<std::uint64_t>("seed");
  s.template_seed = r.Get<std::uint64_t>("template_seed");
  s.domain_shift = r.Get<double>("domain_shift");
  s.signal_scale = r.Get<double>("signal_scale");
  const auto count = r.Get<std::uint64_t>("video count");
  for (std::uint64_t i = 0; i < count; ++i) {
    VideoSample v;
    v.id = r.Get<std::uint64_t>("video id");
    v.label = r.Get<std::uint32_t>("video label");
    const auto frames = r.Get<std::uint32_t>("frame count");
    const auto dim = r.Get<std::uint32_t>("feature count");
    if (frames == 0 || dim == 0) {
      throw IoError("video at byte offset " + std::to_string(r.offset()) +
                    " has an empty frame matrix");
    }
    std::vector<double> data(static_cast<std::size_t>(frames) * dim);
    r.GetDoubles(data, "frame data");
    v.frames = Tensor({frames, dim}, std::move(data));
    out.videos.push_back(std::move(v));
  }
  if (!r.AtEnd()) {
    throw IoError("trailing bytes after video " + std::to_string(count) +
                  " at byte offset " + std::to_string(r.offset()));
  }
  return out;
}

void SaveDataset(const Dataset& dataset, const std::string& path) {
  WriteFileAtomic(path, SerializeDataset(dataset));
}

Dataset LoadDataset(const std::string& path) {
  return DeserializeDataset(ReadFile(path));
}

}  // namespace dpvideo
