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

#include "dpvideo/tape.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "dpvideo/parallel.h"
#include "dpvideo/status.h"

namespace dpvideo {

const char* OpKindName(OpKind kind) {
  switch (kind) {
    case OpKind::kInput: return "input";
    case OpKind::kParam: return "param";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kRelu: return "relu";
    case OpKind::kNormalize: return "normalize";
    case OpKind::kMeanRows: return "mean_rows";
    case OpKind::kSoftmaxCrossEntropy: return "softmax_cross_entropy";
  }
  return "?";
}

namespace {

std::string Describe(const TapeNode& n) {
  return "node '" + n.name + "' (" + OpKindName(n.kind) + ")";
}

std::size_t Rows(const Shape& s) { return s.size() <= 1 ? 1 : s[0]; }
std::size_t Cols(const Shape& s) { return NumElements(s) / Rows(s); }

bool IsRowBroadcast(const Shape& a, const Shape& b) {
  return a != b && NumElements(b) == Cols(a) && Rows(b) == 1;
}

}  // namespace

NodeId Tape::Push(TapeNode node) {
  nodes_.push_back(std::move(node));
  return static_cast<NodeId>(nodes_.size() - 1);
}

const TapeNode& Tape::Checked(NodeId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
    throw InvalidArgumentError("tape node id " + std::to_string(id) +
                               " does not exist");
  }
  return nodes_[id];
}

NodeId Tape::Input(std::string name, Shape shape) {
  NumElements(shape);
  return Push({OpKind::kInput, std::move(name), {}, std::move(shape)});
}

NodeId Tape::Param(std::string name, Shape shape) {
  return Push({OpKind::kParam, std::move(name), {}, std::move(shape)});
}

NodeId Tape::MatMul(NodeId a, NodeId b, std::string label) {
  const Shape& sa = Checked(a).shape;
  const Shape& sb = Checked(b).shape;
  if (Cols(sa) != Rows(sb)) {
    throw ShapeError(label + ": cannot multiply " + ShapeToString(sa) +
                     " by " + ShapeToString(sb));
  }
  return Push({OpKind::kMatMul, std::move(label), {a, b},
               {Rows(sa), Cols(sb)}});
}

NodeId Tape::Add(NodeId a, NodeId b, std::string label) {
  const Shape& sa = Checked(a).shape;
  const Shape& sb = Checked(b).shape;
  if (sa != sb && !IsRowBroadcast(sa, sb)) {
    throw ShapeError(label + ": cannot add " + ShapeToString(sb) + " to " +
                     ShapeToString(sa));
  }
  return Push({OpKind::kAdd, std::move(label), {a, b}, {Rows(sa), Cols(sa)}});
}

NodeId Tape::Relu(NodeId a, std::string label) {
  const Shape& sa = Checked(a).shape;
  return Push({OpKind::kRelu, std::move(label), {a}, {Rows(sa), Cols(sa)}});
}

NodeId Tape::Normalize(NodeId x, NodeId scale, NodeId shift,
                       std::size_t groups, double eps, std::string label) {
  const Shape& sx = Checked(x).shape;
  const std::size_t width = Cols(sx);
  if (groups == 0 || width % groups != 0) {
    throw ShapeError(label + ": " + std::to_string(groups) +
                     " groups do not divide width " + std::to_string(width));
  }
  if (NumElements(Checked(scale).shape) != width ||
      NumElements(Checked(shift).shape) != width) {
    throw ShapeError(label + ": scale/shift must have " +
                     std::to_string(width) + " elements");
  }
  if (!(eps > 0.0)) throw InvalidArgumentError(label + ": eps must be > 0");
  TapeNode node{OpKind::kNormalize, std::move(label), {x, scale, shift},
                {Rows(sx), width}};
  node.groups = groups;
  node.eps = eps;
  return Push(std::move(node));
}

NodeId Tape::MeanRows(NodeId x, std::string label) {
  const Shape& sx = Checked(x).shape;
  return Push({OpKind::kMeanRows, std::move(label), {x}, {1, Cols(sx)}});
}

NodeId Tape::SoftmaxCrossEntropy(NodeId logits, NodeId labels,
                                 std::string label) {
  const Shape& sl = Checked(logits).shape;
  const Shape& sy = Checked(labels).shape;
  if (NumElements(sy) != Rows(sl)) {
    throw ShapeError(label + ": " + std::to_string(NumElements(sy)) +
                     " labels for " + std::to_string(Rows(sl)) + " rows");
  }
  return Push({OpKind::kSoftmaxCrossEntropy, std::move(label),
               {logits, labels}, {1}});
}

void Tape::SetLoss(NodeId id) {
  if (NumElements(Checked(id).shape) != 1) {
    throw ShapeError("loss " + Describe(nodes_[id]) + " is not a scalar");
  }
  loss_ = id;
}

void Tape::SetLogits(NodeId id) {
  Checked(id);
  logits_ = id;
}

std::vector<std::string> Tape::ParamNames() const {
  std::vector<std::string> names;
  for (const TapeNode& n : nodes_) {
    if (n.kind == OpKind::kParam) names.push_back(n.name);
  }
  return names;
}

namespace {

void EvalNode(const Tape& tape, NodeId id, const NamedTensors& inputs,
              const ParameterStore& params, std::vector<Tensor>& values) {
  const TapeNode& n = tape.node(id);
  auto in = [&](int k) -> const Tensor& { return values[n.inputs[k]]; };
  switch (n.kind) {
    case OpKind::kInput: {
      auto it = inputs.find(n.name);
      if (it == inputs.end()) {
        throw ShapeError(Describe(n) + " was not provided");
      }
      if (it->second.shape() != n.shape) {
        throw ShapeError(Describe(n) + " expects " + ShapeToString(n.shape) +
                         ", got " + ShapeToString(it->second.shape()));
      }
      values[id] = it->second;
      return;
    }
    case OpKind::kParam: {
      if (!params.Contains(n.name)) {
        throw ShapeError(Describe(n) + " is missing from the parameter store");
      }
      const Tensor& p = params.Value(n.name);
      if (p.shape() != n.shape) {
        throw ShapeError(Describe(n) + " expects " + ShapeToString(n.shape) +
                         ", got " + ShapeToString(p.shape()));
      }
      values[id] = p;
      return;
    }
    case OpKind::kMatMul:
      values[id] = dpvideo::MatMul(in(0), in(1));
      return;
    case OpKind::kAdd: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      Tensor out({a.rows(), a.cols()}, a.values());
      const std::size_t cols = a.cols();
      if (b.size() == a.size()) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
      } else {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i % cols];
      }
      values[id] = std::move(out);
      return;
    }
    case OpKind::kRelu: {
      const Tensor& a = in(0);
      Tensor out({a.rows(), a.cols()});
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] > 0 ? a[i] : 0;
      values[id] = std::move(out);
      return;
    }
    case OpKind::kNormalize: {
      const Tensor& x = in(0);
      const Tensor& scale = in(1);
      const Tensor& shift = in(2);
      const std::size_t rows = x.rows(), width = x.cols();
      const std::size_t gsize = width / n.groups;
      Tensor out({rows, width});
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t g = 0; g < n.groups; ++g) {
          const double* xs = &x.values()[r * width + g * gsize];
          double mean = 0.0;
          for (std::size_t j = 0; j < gsize; ++j) mean += xs[j];
          mean /= static_cast<double>(gsize);
          double var = 0.0;
          for (std::size_t j = 0; j < gsize; ++j) {
            var += (xs[j] - mean) * (xs[j] - mean);
          }
          var /= static_cast<double>(gsize);
          const double inv_std = 1.0 / std::sqrt(var + n.eps);
          for (std::size_t j = 0; j < gsize; ++j) {
            const std::size_t c = g * gsize + j;
            out.at(r, c) = (xs[j] - mean) * inv_std * scale[c] + shift[c];
          }
        }
      }
      values[id] = std::move(out);
      return;
    }
    case OpKind::kMeanRows: {
      const Tensor& x = in(0);
      Tensor out({1, x.cols()});
      for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) out[c] += x.at(r, c);
      }
      for (double& v : out.values()) v /= static_cast<double>(x.rows());
      values[id] = std::move(out);
      return;
    }
    case OpKind::kSoftmaxCrossEntropy: {
      const Tensor& z = in(0);
      const Tensor& y = in(1);
      const std::size_t classes = z.cols();
      double total = 0.0;
      for (std::size_t r = 0; r < z.rows(); ++r) {
        const double label = y[r];
        if (!(label >= 0) || label >= static_cast<double>(classes) ||
            label != std::floor(label)) {
          throw InvalidArgumentError(Describe(n) + ": label " +
                                     std::to_string(label) +
                                     " is not a class index");
        }
        double zmax = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < classes; ++c) {
          zmax = std::max(zmax, z.at(r, c));
        }
        double sum = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
          sum += std::exp(z.at(r, c) - zmax);
        }
        total += zmax + std::log(sum) - z.at(r, static_cast<std::size_t>(label));
      }
      values[id] = Tensor::Scalar(total / static_cast<double>(z.rows()));
      return;
    }
  }
}

// Accumulates `delta` into grads[id], allocating on first touch.
void Accumulate(std::vector<Tensor>& grads, NodeId id, const Shape& shape,
                const Tensor& delta) {
  Tensor& g = grads[id];
  if (g.empty()) {
    g = Tensor(shape, delta.values());
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

void BackwardNode(const TapeNode& n, const std::vector<Tensor>& values,
                  const Tensor& dout, const std::vector<bool>& needs,
                  std::vector<Tensor>& grads) {
  auto value = [&](int k) -> const Tensor& { return values[n.inputs[k]]; };
  auto wants = [&](int k) { return bool(needs[n.inputs[k]]); };
  switch (n.kind) {
    case OpKind::kInput:
    case OpKind::kParam:
      return;
    case OpKind::kMatMul: {
      const Tensor& a = value(0);
      const Tensor& b = value(1);
      const std::size_t rows = a.rows(), inner = a.cols(), cols = b.cols();
      const double* pa = a.values().data();
      const double* pb = b.values().data();
      const double* pd = dout.values().data();
      if (wants(0)) {
        Tensor da({rows, inner});
        double* out = da.values().data();
        for (std::size_t i = 0; i < rows; ++i) {
          const double* drow = pd + i * cols;
          for (std::size_t p = 0; p < inner; ++p) {
            const double* brow = pb + p * cols;
            double acc = 0.0;
            for (std::size_t j = 0; j < cols; ++j) acc += drow[j] * brow[j];
            out[i * inner + p] = acc;
          }
        }
        Accumulate(grads, n.inputs[0], a.shape(), da);
      }
      if (wants(1)) {
        Tensor db({inner, cols});
        double* out = db.values().data();
        for (std::size_t i = 0; i < rows; ++i) {
          const double* drow = pd + i * cols;
          for (std::size_t p = 0; p < inner; ++p) {
            const double av = pa[i * inner + p];
            if (av == 0.0) continue;
            double* orow = out + p * cols;
            for (std::size_t j = 0; j < cols; ++j) orow[j] += av * drow[j];
          }
        }
        Accumulate(grads, n.inputs[1], b.shape(), db);
      }
      return;
    }
    case OpKind::kAdd: {
      if (wants(0)) Accumulate(grads, n.inputs[0], value(0).shape(), dout);
      if (wants(1)) {
        const Tensor& b = value(1);
        if (b.size() == dout.size()) {
          Accumulate(grads, n.inputs[1], b.shape(), dout);
        } else {
          Tensor db(b.shape());
          const std::size_t cols = dout.cols();
          for (std::size_t i = 0; i < dout.size(); ++i) db[i % cols] += dout[i];
          Accumulate(grads, n.inputs[1], b.shape(), db);
        }
      }
      return;
    }
    case OpKind::kRelu: {
      if (!wants(0)) return;
      const Tensor& a = value(0);
      Tensor da(a.shape());
      for (std::size_t i = 0; i < a.size(); ++i) {
        da[i] = a[i] > 0 ? dout[i] : 0.0;
      }
      Accumulate(grads, n.inputs[0], a.shape(), da);
      return;
    }
    case OpKind::kNormalize: {
      const Tensor& x = value(0);
      const Tensor& scale = value(1);
      const std::size_t rows = x.rows(), width = x.cols();
      const std::size_t gsize = width / n.groups;
      const double m = static_cast<double>(gsize);
      Tensor dx(x.shape()), dscale(scale.shape()), dshift(value(2).shape());
      std::vector<double> xhat(gsize), dxhat(gsize);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t g = 0; g < n.groups; ++g) {
          const std::size_t base = r * width + g * gsize;
          double mean = 0.0;
          for (std::size_t j = 0; j < gsize; ++j) mean += x[base + j];
          mean /= m;
          double var = 0.0;
          for (std::size_t j = 0; j < gsize; ++j) {
            var += (x[base + j] - mean) * (x[base + j] - mean);
          }
          var /= m;
          const double inv_std = 1.0 / std::sqrt(var + n.eps);
          double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
          for (std::size_t j = 0; j < gsize; ++j) {
            const std::size_t c = g * gsize + j;
            xhat[j] = (x[base + j] - mean) * inv_std;
            dxhat[j] = dout[base + j] * scale[c];
            dscale[c] += dout[base + j] * xhat[j];
            dshift[c] += dout[base + j];
            sum_dxhat += dxhat[j];
            sum_dxhat_xhat += dxhat[j] * xhat[j];
          }
          for (std::size_t j = 0; j < gsize; ++j) {
            dx[base + j] = inv_std * (dxhat[j] - sum_dxhat / m -
                                      xhat[j] * sum_dxhat_xhat / m);
          }
        }
      }
      if (wants(0)) Accumulate(grads, n.inputs[0], x.shape(), dx);
      if (wants(1)) Accumulate(grads, n.inputs[1], scale.shape(), dscale);
      if (wants(2)) Accumulate(grads, n.inputs[2], value(2).shape(), dshift);
      return;
    }
    case OpKind::kMeanRows: {
      if (!wants(0)) return;
      const Tensor& x = value(0);
      Tensor dx(x.shape());
      const double inv = 1.0 / static_cast<double>(x.rows());
      for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) dx.at(r, c) = dout[c] * inv;
      }
      Accumulate(grads, n.inputs[0], x.shape(), dx);
      return;
    }
    case OpKind::kSoftmaxCrossEntropy: {
      if (!wants(0)) return;
      const Tensor& z = value(0);
      const Tensor& y = value(1);
      const std::size_t classes = z.cols();
      const double scale = dout[0] / static_cast<double>(z.rows());
      Tensor dz(z.shape());
      for (std::size_t r = 0; r < z.rows(); ++r) {
        double zmax = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < classes; ++c) {
          zmax = std::max(zmax, z.at(r, c));
        }
        double sum = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
          sum += std::exp(z.at(r, c) - zmax);
        }
        for (std::size_t c = 0; c < classes; ++c) {
          dz.at(r, c) = std::exp(z.at(r, c) - zmax) / sum * scale;
        }
        dz.at(r, static_cast<std::size_t>(y[r])) -= scale;
      }
      Accumulate(grads, n.inputs[0], z.shape(), dz);
      return;
    }
  }
}

}  // namespace

ForwardResult Forward(const Tape& tape, const NamedTensors& inputs,
                      const ParameterStore& params) {
  if (tape.loss() < 0) throw InvalidArgumentError("tape has no loss node");
  ForwardResult result;
  result.values.resize(tape.nodes().size());
  for (NodeId id = 0; id <= tape.loss(); ++id) {
    EvalNode(tape, id, inputs, params, result.values);
  }
  result.loss = result.values[tape.loss()][0];
  if (tape.logits() >= 0) result.logits = result.values[tape.logits()];
  return result;
}

Tensor ForwardLogits(const Tape& tape, const NamedTensors& inputs,
                     const ParameterStore& params) {
  if (tape.logits() < 0) throw InvalidArgumentError("tape has no logits node");
  std::vector<Tensor> values(tape.logits() + 1);
  for (NodeId id = 0; id <= tape.logits(); ++id) {
    EvalNode(tape, id, inputs, params, values);
  }
  return std::move(values[tape.logits()]);
}

GradVector Backward(const Tape& tape, const ForwardResult& fwd,
                    const ParameterStore& params, double loss_scale) {
  const auto nodes = tape.nodes();
  const NodeId loss = tape.loss();
  // A node needs a gradient when a trainable parameter feeds into it.
  std::vector<bool> needs(nodes.size(), false);
  for (NodeId id = 0; id <= loss; ++id) {
    const TapeNode& n = nodes[id];
    if (n.kind == OpKind::kParam) {
      needs[id] = params.Get(n.name).trainable;
    } else {
      for (NodeId in : n.inputs) needs[id] = needs[id] || needs[in];
    }
  }
  std::vector<Tensor> grads(nodes.size());
  if (needs[loss]) {
    grads[loss] = Tensor::Scalar(loss_scale);
    for (NodeId id = loss; id >= 0; --id) {
      if (grads[id].empty() || !needs[id]) continue;
      BackwardNode(nodes[id], fwd.values, grads[id], needs, grads);
    }
  }
  // Parameter nodes may repeat a name; their gradients add up.
  GradVector flat(params.CountTrainable(), 0.0);
  std::size_t offset = 0;
  for (const Parameter& p : params.entries()) {
    if (!p.trainable) continue;
    for (NodeId id = 0; id <= loss; ++id) {
      const TapeNode& n = nodes[id];
      if (n.kind != OpKind::kParam || n.name != p.name || grads[id].empty()) {
        continue;
      }
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        flat[offset + i] += grads[id][i];
      }
    }
    offset += p.value.size();
  }
  return flat;
}

PerSampleGradients BackwardPerSample(const Tape& tape,
                                     std::span<const NamedTensors> batch,
                                     const ParameterStore& params,
                                     int workers) {
  if (batch.empty()) {
    throw InvalidArgumentError("per-sample gradients need at least 1 sample");
  }
  PerSampleGradients out;
  out.grads.resize(batch.size());
  out.losses.resize(batch.size());
  ParallelFor(batch.size(), workers, [&](std::size_t i) {
    ForwardResult fwd = Forward(tape, batch[i], params);
    if (!std::isfinite(fwd.loss)) {
      throw NumericError("non-finite loss for sample " + std::to_string(i));
    }
    out.losses[i] = fwd.loss;
    out.grads[i] = Backward(tape, fwd, params);
    for (double g : out.grads[i]) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient for sample " +
                           std::to_string(i));
      }
    }
  });
  return out;
}

}  // namespace dpvideo
