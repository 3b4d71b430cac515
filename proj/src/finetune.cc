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

#include "dpvideo/finetune.h"

#include "dpvideo/status.h"

namespace dpvideo {
namespace {

bool StartsWith(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

bool EndsWith(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.substr(s.size() - suffix.size()) == suffix;
}

bool IsNorm(std::string_view name) {
  return EndsWith(name, ".norm.scale") || EndsWith(name, ".norm.shift");
}

bool IsAdapter(std::string_view name) {
  return StartsWith(name, "adapter") &&
         (name.find(".down.") != std::string_view::npos ||
          name.find(".up.") != std::string_view::npos);
}

}  // namespace

Scheme Scheme::Parse(const std::string& text, std::size_t bottleneck_dim) {
  if (text == "from_scratch") return {Kind::kFromScratch, 0};
  if (text == "full") return {Kind::kFullFineTune, 0};
  if (text == "linear_probe") return {Kind::kLinearProbe, 0};
  if (text == "selective") return {Kind::kSelectiveFineTune, 0};
  if (text == "adapter") {
    if (bottleneck_dim == 0) {
      throw InvalidArgumentError("adapter scheme needs a bottleneck_dim > 0");
    }
    return {Kind::kAdapter, bottleneck_dim};
  }
  throw InvalidArgumentError(
      "unknown scheme '" + text +
      "' (expected from_scratch, full, linear_probe, selective, adapter)");
}

std::string Scheme::ToString() const {
  switch (kind) {
    case Kind::kFromScratch: return "from_scratch";
    case Kind::kFullFineTune: return "full";
    case Kind::kLinearProbe: return "linear_probe";
    case Kind::kSelectiveFineTune: return "selective";
    case Kind::kAdapter: return "adapter";
  }
  return "?";
}

bool IsTrainableUnder(const Scheme& scheme, const std::string& name) {
  switch (scheme.kind) {
    case Scheme::Kind::kFromScratch:
    case Scheme::Kind::kFullFineTune:
      return true;
    case Scheme::Kind::kLinearProbe:
      return StartsWith(name, "head.");
    case Scheme::Kind::kSelectiveFineTune:
      return StartsWith(name, "head.") || IsNorm(name);
    case Scheme::Kind::kAdapter:
      return StartsWith(name, "head.") || IsAdapter(name);
  }
  return false;
}

void ApplyScheme(Model& model, const Scheme& scheme, std::uint64_t seed) {
  if (scheme.kind == Scheme::Kind::kSelectiveFineTune &&
      model.config.norm.kind == NormSpec::Kind::kNone) {
    throw InvalidArgumentError(
        "selective fine-tuning trains normalization layers, but this model "
        "has none; build it with norm=layer or norm=group:<g>, or use "
        "linear_probe");
  }
  if (scheme.kind == Scheme::Kind::kAdapter && !model.adapters) {
    throw InvalidArgumentError(
        "adapter scheme requires adapters; call InsertAdapters first");
  }
  if (scheme.kind == Scheme::Kind::kFromScratch) {
    InitializeParameters(model.params, seed);
  }
  for (Parameter& p : model.params.entries()) {
    p.trainable = IsTrainableUnder(scheme, p.name);
  }
}

}  // namespace dpvideo
