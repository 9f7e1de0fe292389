/* Copyright 2026 The nerfcodec Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Reverse-mode differentiation over dense tensors.
//
// A Tape records every forward operation as a node in creation order, which
// is by construction a topological order of the computation. Backward() walks
// the nodes once in reverse and accumulates adjoints into per-node gradient
// buffers. Accumulation order is fixed by node order, so two runs of the same
// program produce bit-identical gradients.
//
// Leaves either own their value or reference external storage (model
// parameters), in which case the referenced tensor must outlive the tape.

#ifndef NERFCODEC_TAPE_H_
#define NERFCODEC_TAPE_H_

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "nerfcodec/tensor.h"

namespace nerfcodec {

enum class OpKind {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kMatMul,
  kConv2d,
  kConv3d,
  kBilinearGather,
  kMeanPoolAxis,
  kConcat,
  kSumReduce,
  kRelu,
  kSoftplus,
  kSigmoid,
  kExp,
  kLog,
  kSquare,
  kBroadcast,
  kUpsample2d,
  kReshape,
  kSlice,
};

const char* OpKindName(OpKind kind);

template <typename T>
class Tape;

// Handle to a node on a tape. Cheap to copy.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Tensor<T>& value() const { return tape->value(id); }
  const Shape& shape() const { return tape->value(id).shape; }
};

#ifdef NDEBUG
inline constexpr bool kCheckFiniteByDefault = false;
#else
inline constexpr bool kCheckFiniteByDefault = true;
#endif

template <typename T>
class Tape {
 public:
  // Receives the adjoint of the node's output and pushes contributions into
  // its inputs through MutableGrad().
  using BackwardFn = std::function<void(const Tensor<T>& grad_out, Tape& tape)>;

  explicit Tape(bool check_finite = kCheckFiniteByDefault)
      : check_finite_(check_finite) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // A leaf that references `external`; no copy is made.
  Var<T> Leaf(const Tensor<T>* external, bool requires_grad);
  // A leaf that owns its value.
  Var<T> Leaf(Tensor<T> value, bool requires_grad);
  Var<T> Constant(Tensor<T> value) { return Leaf(std::move(value), false); }

  // Records an op node. The node requires grad iff any input does; when none
  // does, `backward` is dropped.
  Var<T> Record(OpKind kind, const std::vector<int>& inputs, Tensor<T> value,
                BackwardFn backward);

  // Runs reverse accumulation from a scalar node. May be called once per
  // tape.
  void Backward(Var<T> loss);

  const Tensor<T>& value(int id) const { return *nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  OpKind kind(int id) const { return nodes_[id].kind; }
  int size() const { return static_cast<int>(nodes_.size()); }

  // Gradient of the last Backward() loss w.r.t. `v`. Nodes that do not
  // require grad, or that the loss does not reach, get zeros.
  Tensor<T> Grad(Var<T> v) const;
  bool HasGrad(Var<T> v) const { return grads_[v.id].has_value(); }

  // Sum, in node order, of the gradients of every leaf that references
  // `external`. Zeros when no such leaf received a gradient.
  Tensor<T> ExternalGrad(const Tensor<T>* external) const;

  // Gradient buffer for `id`, zero-initialised on first access. Only valid
  // during Backward() for nodes that require grad.
  Tensor<T>& MutableGrad(int id);

  bool check_finite() const { return check_finite_; }

 private:
  struct Node {
    OpKind kind = OpKind::kLeaf;
    std::vector<int> inputs;
    std::unique_ptr<Tensor<T>> owned;
    const Tensor<T>* value = nullptr;
    bool requires_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::vector<std::optional<Tensor<T>>> grads_;
  bool check_finite_;
  bool backward_done_ = false;
};

}  // namespace nerfcodec

#endif  // NERFCODEC_TAPE_H_
