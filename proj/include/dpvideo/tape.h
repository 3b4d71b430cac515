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

#ifndef DPVIDEO_TAPE_H_
#define DPVIDEO_TAPE_H_

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dpvideo/param_store.h"
#include "dpvideo/tensor.h"

namespace dpvideo {

using NodeId = int;
using NamedTensors = std::map<std::string, Tensor, std::less<>>;

// Flattened gradient over the trainable entries of a ParameterStore, in
// store order.
using GradVector = std::vector<double>;

enum class OpKind {
  kInput,
  kParam,
  kMatMul,
  kAdd,
  kRelu,
  kNormalize,
  kMeanRows,
  kSoftmaxCrossEntropy,
};

const char* OpKindName(OpKind kind);

struct TapeNode {
  OpKind kind;
  // Input/parameter name, or a descriptive label for operations.
  std::string name;
  std::vector<NodeId> inputs;
  Shape shape;
  // kNormalize only.
  std::size_t groups = 1;
  double eps = 0.0;
};

// A static computation graph recorded in topological order. Builder
// methods infer output shapes eagerly and throw ShapeError on mismatch.
// All values are matrices; rank-1 parameters act as row vectors.
class Tape {
 public:
  NodeId Input(std::string name, Shape shape);
  NodeId Param(std::string name, Shape shape);

  NodeId MatMul(NodeId a, NodeId b, std::string label = "matmul");
  // b may match a's shape or be a row vector broadcast over a's rows.
  NodeId Add(NodeId a, NodeId b, std::string label = "add");
  NodeId Relu(NodeId a, std::string label = "relu");
  // Per-row normalization over `groups` contiguous feature groups,
  // followed by an elementwise affine (scale, shift) over the full width.
  // groups == 1 is LayerNorm.
  NodeId Normalize(NodeId x, NodeId scale, NodeId shift, std::size_t groups,
                   double eps, std::string label = "norm");
  // [n x m] -> [1 x m].
  NodeId MeanRows(NodeId x, std::string label = "mean_rows");
  // Mean over rows of (logsumexp(z_r) - z_r[label_r]); labels hold class
  // indices as doubles, one per row.
  NodeId SoftmaxCrossEntropy(NodeId logits, NodeId labels,
                             std::string label = "xent");

  void SetLoss(NodeId id);
  void SetLogits(NodeId id);

  NodeId loss() const { return loss_; }
  NodeId logits() const { return logits_; }
  std::span<const TapeNode> nodes() const { return nodes_; }
  const TapeNode& node(NodeId id) const { return nodes_.at(id); }

  // Names of parameter nodes, in recording order.
  std::vector<std::string> ParamNames() const;

 private:
  NodeId Push(TapeNode node);
  const TapeNode& Checked(NodeId id) const;

  std::vector<TapeNode> nodes_;
  NodeId loss_ = -1;
  NodeId logits_ = -1;
};

struct ForwardResult {
  double loss = 0.0;
  Tensor logits;
  // Value of every evaluated node, indexed by NodeId.
  std::vector<Tensor> values;
};

// Evaluates the whole tape. Identical inputs and parameters give
// bit-identical results.
ForwardResult Forward(const Tape& tape, const NamedTensors& inputs,
                      const ParameterStore& params);

// Evaluates only the prefix of the tape needed for the logits node, so
// inputs recorded after it (labels) may be omitted.
Tensor ForwardLogits(const Tape& tape, const NamedTensors& inputs,
                     const ParameterStore& params);

// Reverse pass from the loss node of `fwd`. Returns the gradient of
// `loss_scale * loss` with respect to every trainable parameter, flattened
// in store order. Trainable parameters not reachable from the loss get
// zeros.
GradVector Backward(const Tape& tape, const ForwardResult& fwd,
                    const ParameterStore& params, double loss_scale = 1.0);

struct PerSampleGradients {
  std::vector<GradVector> grads;
  std::vector<double> losses;
};

// One forward/backward pass per sample; grads[i] is the gradient of
// sample i's loss alone. `workers` > 1 spreads samples over threads; the
// result does not depend on the worker count. Throws NumericError naming
// the sample index when a loss is not finite.
PerSampleGradients BackwardPerSample(const Tape& tape,
                                     std::span<const NamedTensors> batch,
                                     const ParameterStore& params,
                                     int workers = 1);

}  // namespace dpvideo

#endif  // DPVIDEO_TAPE_H_
