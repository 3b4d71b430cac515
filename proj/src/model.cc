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

#include "dpvideo/model.h"

#include <cmath>
#include <utility>

#include "dpvideo/binary_io.h"
#include "dpvideo/random.h"
#include "dpvideo/status.h"

namespace dpvideo {
namespace {

constexpr char kCheckpointMagic[] = "DPVM";
constexpr std::uint32_t kCheckpointVersion = 1;

bool EndsWith(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.substr(s.size() - suffix.size()) == suffix;
}

bool StartsWith(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

std::uint32_t Fnv1a(std::string_view s) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : s) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

void InitOne(Parameter& p, std::uint64_t seed) {
  const std::string& name = p.name;
  if (EndsWith(name, ".norm.scale")) {
    p.value.Fill(1.0);
    return;
  }
  if (EndsWith(name, ".bias") || EndsWith(name, ".norm.shift") ||
      (StartsWith(name, "adapter") && name.find(".up.") != std::string::npos)) {
    p.value.Fill(0.0);
    return;
  }
  // Dense weights [fan_in x fan_out]: He-normal for ReLU-fed layers,
  // variance 1/fan_in for the head.
  const double fan_in = static_cast<double>(p.value.rows());
  const double gain = StartsWith(name, "head.") ? 1.0 : 2.0;
  const double stddev = std::sqrt(gain / fan_in);
  PhiloxEngine rng(seed, Stream::kInit, Fnv1a(name));
  for (double& v : p.value.values()) v = stddev * rng.Normal();
}

std::string Layer(std::size_t i) { return "layer" + std::to_string(i); }
std::string Adapter(std::size_t i) { return "adapter" + std::to_string(i); }

}  // namespace

NormSpec NormSpec::Parse(const std::string& text) {
  if (text == "none") return None();
  if (text == "layer" || text == "layernorm") return LayerNorm();
  if (StartsWith(text, "group:")) {
    const std::string count = text.substr(6);
    std::size_t pos = 0;
    long long g = 0;
    try {
      g = std::stoll(count, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != count.size() || g <= 0) {
      throw InvalidArgumentError("bad group count in norm '" + text + "'");
    }
    return GroupNorm(static_cast<std::size_t>(g));
  }
  if (text == "batch" || text == "batchnorm") {
    throw InvalidArgumentError(
        "batch normalization is not supported: its batch statistics make "
        "each sample's output depend on the rest of the batch; use 'layer' "
        "or 'group:<g>'");
  }
  throw InvalidArgumentError("unknown norm '" + text +
                             "' (expected none, layer, group:<g>)");
}

std::string NormSpec::ToString() const {
  switch (kind) {
    case Kind::kNone: return "none";
    case Kind::kLayerNorm: return "layer";
    case Kind::kGroupNorm: return "group:" + std::to_string(groups);
  }
  return "?";
}

void ModelConfig::Validate() const {
  if (input_dim == 0 || frames_per_clip == 0 || num_classes == 0) {
    throw InvalidArgumentError(
        "input_dim, frames_per_clip and num_classes must be positive");
  }
  for (std::size_t i = 0; i < hidden_dims.size(); ++i) {
    const std::size_t width = hidden_dims[i];
    if (width == 0) throw InvalidArgumentError("hidden widths must be > 0");
    if (norm.kind == NormSpec::Kind::kGroupNorm &&
        (norm.groups == 0 || width % norm.groups != 0)) {
      throw InvalidArgumentError(
          "GroupNorm with " + std::to_string(norm.groups) +
          " groups does not divide hidden width " + std::to_string(width) +
          " of layer " + std::to_string(i));
    }
  }
}

Tape BuildTape(const ModelConfig& config,
               const std::optional<AdapterSpec>& adapters) {
  config.Validate();
  Tape tape;
  NodeId h = tape.Input(kClipInput, {config.frames_per_clip, config.input_dim});
  std::size_t width = config.input_dim;
  for (std::size_t i = 0; i < config.hidden_dims.size(); ++i) {
    const std::size_t out = config.hidden_dims[i];
    const std::string layer = Layer(i);
    NodeId w = tape.Param(layer + ".weight", {width, out});
    NodeId b = tape.Param(layer + ".bias", {out});
    h = tape.Add(tape.MatMul(h, w, layer + ".matmul"), b, layer + ".add");
    if (config.norm.kind != NormSpec::Kind::kNone) {
      NodeId scale = tape.Param(layer + ".norm.scale", {out});
      NodeId shift = tape.Param(layer + ".norm.shift", {out});
      h = tape.Normalize(h, scale, shift, config.norm.groups, kNormEpsilon,
                         layer + ".norm");
    }
    h = tape.Relu(h, layer + ".relu");
    if (adapters) {
      const std::string a = Adapter(i);
      const std::size_t k = adapters->bottleneck_dim;
      NodeId dw = tape.Param(a + ".down.weight", {out, k});
      NodeId db = tape.Param(a + ".down.bias", {k});
      NodeId uw = tape.Param(a + ".up.weight", {k, out});
      NodeId ub = tape.Param(a + ".up.bias", {out});
      NodeId z = tape.Relu(
          tape.Add(tape.MatMul(h, dw, a + ".down"), db, a + ".down.add"),
          a + ".relu");
      z = tape.Add(tape.MatMul(z, uw, a + ".up"), ub, a + ".up.add");
      h = tape.Add(h, z, a + ".skip");
    }
    width = out;
  }
  NodeId pooled = tape.MeanRows(h, "pool");
  NodeId hw = tape.Param("head.weight", {width, config.num_classes});
  NodeId hb = tape.Param("head.bias", {config.num_classes});
  NodeId logits = tape.Add(tape.MatMul(pooled, hw, "head.matmul"), hb,
                           "head.add");
  tape.SetLogits(logits);
  NodeId label = tape.Input(kLabelInput, {1});
  tape.SetLoss(tape.SoftmaxCrossEntropy(logits, label, "loss"));
  return tape;
}

void InitializeParameters(ParameterStore& store, std::uint64_t seed) {
  for (Parameter& p : store.entries()) InitOne(p, seed);
}

Model BuildModel(const ModelConfig& config, std::uint64_t seed) {
  Model model{config, std::nullopt, BuildTape(config, std::nullopt), {}};
  for (const TapeNode& n : model.tape.nodes()) {
    if (n.kind == OpKind::kParam) model.params.Add(n.name, Tensor(n.shape));
  }
  InitializeParameters(model.params, seed);
  return model;
}

std::size_t AdapterParameterCount(std::size_t width, std::size_t bottleneck) {
  return (width * bottleneck + bottleneck) + (bottleneck * width + width);
}

Model InsertAdapters(const Model& model, const AdapterSpec& spec,
                     std::uint64_t seed) {
  if (model.adapters) {
    throw InvalidArgumentError("model already has adapters");
  }
  if (model.config.hidden_dims.empty()) {
    throw InvalidArgumentError(
        "adapters attach after hidden blocks; this model has none");
  }
  if (spec.bottleneck_dim == 0) {
    throw InvalidArgumentError("adapter bottleneck must be positive");
  }
  for (std::size_t width : model.config.hidden_dims) {
    if (spec.bottleneck_dim >= width) {
      throw InvalidArgumentError(
          "adapter bottleneck " + std::to_string(spec.bottleneck_dim) +
          " must be smaller than hidden width " + std::to_string(width));
    }
  }
  Model out{model.config, spec, BuildTape(model.config, spec), model.params};
  for (const TapeNode& n : out.tape.nodes()) {
    if (n.kind != OpKind::kParam || out.params.Contains(n.name)) continue;
    Parameter p{n.name, Tensor(n.shape), true};
    InitOne(p, seed);
    out.params.Add(std::move(p.name), std::move(p.value), true);
  }
  return out;
}

NamedTensors ClipInputs(const Tensor& clip, std::uint32_t label) {
  NamedTensors inputs;
  inputs.emplace(kClipInput, clip);
  inputs.emplace(kLabelInput, Tensor::Scalar(static_cast<double>(label)));
  return inputs;
}

Tensor ClipLogits(const Model& model, const Tensor& clip) {
  NamedTensors inputs;
  inputs.emplace(kClipInput, clip);
  return ForwardLogits(model.tape, inputs, model.params);
}

std::vector<double> VideoLogits(const Model& model, const VideoSample& video) {
  const std::vector<Tensor> clips =
      ChunkVideo(video, model.config.frames_per_clip);
  std::vector<double> mean(model.config.num_classes, 0.0);
  for (const Tensor& clip : clips) {
    const Tensor logits = ClipLogits(model, clip);
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += logits[c];
  }
  for (double& m : mean) m /= static_cast<double>(clips.size());
  return mean;
}

std::uint32_t ArgMax(std::span<const double> values) {
  std::uint32_t best = 0;
  for (std::uint32_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::uint32_t PredictVideo(const Model& model, const VideoSample& video) {
  return ArgMax(VideoLogits(model, video));
}

std::string SerializeCheckpoint(const ParameterStore& store) {
  BinaryWriter w;
  w.Bytes({kCheckpointMagic, 4});
  w.Put(kCheckpointVersion);
  for (const Parameter& p : store.entries()) {
    w.Put(static_cast<std::uint32_t>(p.name.size()));
    w.Bytes(p.name);
    w.Put(static_cast<std::uint32_t>(p.value.rank()));
    for (std::size_t d : p.value.shape()) w.Put(static_cast<std::uint64_t>(d));
    w.PutDoubles(p.value.data());
  }
  return w.buffer();
}

ParameterStore DeserializeCheckpoint(std::string_view bytes) {
  BinaryReader r(bytes);
  if (r.Bytes(4, "magic") != std::string_view(kCheckpointMagic, 4)) {
    throw IoError("not a DPVM checkpoint (bad magic)");
  }
  const auto version = r.Get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw IoError("unsupported DPVM version " + std::to_string(version));
  }
  ParameterStore store;
  while (!r.AtEnd()) {
    const auto name_len = r.Get<std::uint32_t>("name length");
    std::string name(r.Bytes(name_len, "parameter name"));
    const auto rank = r.Get<std::uint32_t>("rank");
    if (rank == 0) {
      throw IoError("parameter '" + name + "' has rank 0 at byte offset " +
                    std::to_string(r.offset()));
    }
    Shape shape(rank);
    for (auto& d : shape) {
      d = r.Get<std::uint64_t>("dimension");
      if (d == 0) throw IoError("parameter '" + name + "' has a zero dim");
    }
    std::vector<double> data(NumElements(shape));
    r.GetDoubles(data, "payload of '" + name + "'");
    store.Add(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return store;
}

void SaveCheckpoint(const ParameterStore& store, const std::string& path) {
  WriteFileAtomic(path, SerializeCheckpoint(store));
}

ParameterStore LoadCheckpoint(const std::string& path) {
  return DeserializeCheckpoint(ReadFile(path));
}

void LoadWeightsInto(ParameterStore& store, const ParameterStore& checkpoint) {
  for (const Parameter& p : checkpoint.entries()) {
    if (!store.Contains(p.name)) {
      throw InvalidArgumentError("incompatible checkpoint: parameter '" +
                                 p.name + "' does not exist in the model");
    }
  }
  for (Parameter& p : store.entries()) {
    if (!checkpoint.Contains(p.name)) {
      if (StartsWith(p.name, "adapter")) continue;
      throw InvalidArgumentError("incompatible checkpoint: missing '" +
                                 p.name + "'");
    }
    const Tensor& src = checkpoint.Value(p.name);
    if (src.shape() != p.value.shape()) {
      throw InvalidArgumentError(
          "incompatible checkpoint: '" + p.name + "' has shape " +
          ShapeToString(src.shape()) + ", model expects " +
          ShapeToString(p.value.shape()));
    }
    p.value = src;
  }
}

}  // namespace dpvideo
