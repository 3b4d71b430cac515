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

#include "dpvideo/param_store.h"

#include <utility>

#include "dpvideo/status.h"

namespace dpvideo {

void ParameterStore::Add(std::string name, Tensor value, bool trainable) {
  if (index_.contains(name)) {
    throw InvalidArgumentError("duplicate parameter name '" + name + "'");
  }
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), std::move(value), trainable});
}

bool ParameterStore::Contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

const Parameter& ParameterStore::Get(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) {
    throw InvalidArgumentError("unknown parameter '" + std::string(name) +
                               "'");
  }
  return entries_[it->second];
}

Parameter& ParameterStore::Get(std::string_view name) {
  return const_cast<Parameter&>(std::as_const(*this).Get(name));
}

void ParameterStore::SetTrainable(std::string_view name, bool trainable) {
  Get(name).trainable = trainable;
}

void ParameterStore::SetAllTrainable(bool trainable) {
  for (Parameter& p : entries_) p.trainable = trainable;
}

std::size_t ParameterStore::CountTrainable() const {
  std::size_t n = 0;
  for (const Parameter& p : entries_) {
    if (p.trainable) n += p.value.size();
  }
  return n;
}

std::size_t ParameterStore::CountAll() const {
  std::size_t n = 0;
  for (const Parameter& p : entries_) n += p.value.size();
  return n;
}

std::vector<double> ParameterStore::FlattenTrainable() const {
  std::vector<double> flat;
  flat.reserve(CountTrainable());
  for (const Parameter& p : entries_) {
    if (p.trainable) {
      flat.insert(flat.end(), p.value.values().begin(), p.value.values().end());
    }
  }
  return flat;
}

void ParameterStore::ApplyUpdate(std::span<const double> update,
                                 double scale) {
  if (update.size() != CountTrainable()) {
    throw ShapeError("update has " + std::to_string(update.size()) +
                     " entries but the store has " +
                     std::to_string(CountTrainable()) + " trainable values");
  }
  std::size_t offset = 0;
  for (Parameter& p : entries_) {
    if (!p.trainable) continue;
    for (double& v : p.value.values()) v -= scale * update[offset++];
  }
}

bool operator==(const ParameterStore& a, const ParameterStore& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    const Parameter& x = a.entries_[i];
    const Parameter& y = b.entries_[i];
    if (x.name != y.name || x.trainable != y.trainable || !(x.value == y.value))
      return false;
  }
  return true;
}

}  // namespace dpvideo
