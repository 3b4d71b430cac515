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

#ifndef DPVIDEO_FINETUNE_H_
#define DPVIDEO_FINETUNE_H_

#include <cstddef>
#include <cstdint>
#include <string>

#include "dpvideo/model.h"

namespace dpvideo {

struct Scheme {
  enum class Kind {
    kFromScratch,
    kFullFineTune,
    kLinearProbe,
    kSelectiveFineTune,
    kAdapter,
  };
  Kind kind = Kind::kFullFineTune;
  // kAdapter only.
  std::size_t bottleneck_dim = 0;

  // Config spellings: from_scratch, full, linear_probe, selective, adapter.
  static Scheme Parse(const std::string& text, std::size_t bottleneck_dim = 0);
  std::string ToString() const;

  friend bool operator==(const Scheme&, const Scheme&) = default;
};

// Sets trainable flags for `scheme`:
//   from_scratch, full   every parameter (from_scratch also redraws all
//                        values from `seed`)
//   linear_probe         head.*
//   selective            head.* and every *.norm.scale / *.norm.shift
//   adapter              head.* and every adapter*.{down,up}.*
// Selective on a model without normalization layers and adapter on a
// model without inserted adapters throw InvalidArgumentError. Applying the
// same scheme twice is a no-op.
void ApplyScheme(Model& model, const Scheme& scheme, std::uint64_t seed = 0);

// Trainable flags a scheme assigns to one parameter name.
bool IsTrainableUnder(const Scheme& scheme, const std::string& name);

}  // namespace dpvideo

#endif  // DPVIDEO_FINETUNE_H_
