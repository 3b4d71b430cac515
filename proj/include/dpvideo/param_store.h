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

#ifndef DPVIDEO_PARAM_STORE_H_
#define DPVIDEO_PARAM_STORE_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dpvideo/tensor.h"

namespace dpvideo {

struct Parameter {
  std::string name;
  Tensor value;
  bool trainable = true;
};

// Named model parameters in insertion order. The order of trainable
// entries defines the layout of every flattened gradient vector.
class ParameterStore {
 public:
  // Throws InvalidArgumentError on a duplicate name.
  void Add(std::string name, Tensor value, bool trainable = true);

  bool Contains(std::string_view name) const;
  const Parameter& Get(std::string_view name) const;
  Parameter& Get(std::string_view name);
  const Tensor& Value(std::string_view name) const { return Get(name).value; }

  std::span<const Parameter> entries() const { return entries_; }
  std::span<Parameter> entries() { return entries_; }
  std::size_t size() const { return entries_.size(); }

  void SetTrainable(std::string_view name, bool trainable);
  void SetAllTrainable(bool trainable);

  std::size_t CountTrainable() const;
  std::size_t CountAll() const;

  // Concatenation of trainable tensors, in store order.
  std::vector<double> FlattenTrainable() const;

  // params[trainable] -= scale * update, where `update` is laid out as by
  // FlattenTrainable(). Frozen entries are never touched.
  void ApplyUpdate(std::span<const double> update, double scale);

  friend bool operator==(const ParameterStore& a, const ParameterStore& b);

 private:
  std::vector<Parameter> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace dpvideo

#endif  // DPVIDEO_PARAM_STORE_H_
