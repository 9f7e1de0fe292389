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

#include "nerfcodec/tape.h"

#include <string>

namespace nerfcodec {

const char* OpKindName(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kConv2d: return "conv2d";
    case OpKind::kConv3d: return "conv3d";
    case OpKind::kBilinearGather: return "bilinear-gather";
    case OpKind::kMeanPoolAxis: return "mean-pool-axis";
    case OpKind::kConcat: return "concat";
    case OpKind::kSumReduce: return "sum-reduce";
    case OpKind::kRelu: return "relu";
    case OpKind::kSoftplus: return "softplus";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kExp: return "exp";
    case OpKind::kLog: return "log";
    case OpKind::kSquare: return "square";
    case OpKind::kBroadcast: return "broadcast";
    case OpKind::kUpsample2d: return "upsample2d";
    case OpKind::kReshape: return "reshape";
    case OpKind::kSlice: return "slice";
  }
  return "unknown";
}

template <typename T>
Var<T> Tape<T>::Leaf(const Tensor<T>* external, bool requires_grad) {
  if (external == nullptr) throw ContractError("null leaf tensor");
  Node node;
  node.value = external;
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var<T>{this, static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var<T> Tape<T>::Leaf(Tensor<T> value, bool requires_grad) {
  Node node;
  node.owned = std::make_unique<Tensor<T>>(std::move(value));
  node.value = node.owned.get();
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var<T>{this, static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var<T> Tape<T>::Record(OpKind kind, const std::vector<int>& inputs,
                       Tensor<T> value, BackwardFn backward) {
  const int id = static_cast<int>(nodes_.size());
  if (check_finite_ && !AllFinite<T>(value.span())) {
    throw NumericError(std::string("non-finite output from op '") +
                       OpKindName(kind) + "' (node " + std::to_string(id) +
                       ")");
  }
  Node node;
  node.kind = kind;
  node.inputs = inputs;
  for (int in : inputs) {
    if (in < 0 || in >= id) throw ContractError("op input is not on the tape");
    node.requires_grad = node.requires_grad || nodes_[in].requires_grad;
  }
  node.owned = std::make_unique<Tensor<T>>(std::move(value));
  node.value = node.owned.get();
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var<T>{this, id};
}

template <typename T>
void Tape<T>::Backward(Var<T> loss) {
  if (loss.tape != this) throw ContractError("loss belongs to another tape");
  if (value(loss.id).size() != 1) {
    throw ContractError("backward needs a scalar loss, got shape " +
                        ShapeString(value(loss.id).shape));
  }
  if (backward_done_) throw ContractError("backward already ran on this tape");
  backward_done_ = true;
  grads_.assign(nodes_.size(), std::nullopt);
  if (!nodes_[loss.id].requires_grad) return;
  grads_[loss.id] = Tensor<T>(value(loss.id).shape, T(1));
  for (int id = loss.id; id >= 0; --id) {
    Node& node = nodes_[id];
    if (!node.requires_grad || !grads_[id].has_value() || !node.backward) {
      continue;
    }
    node.backward(*grads_[id], *this);
    // Intermediate adjoints are no longer needed once propagated.
    if (node.kind != OpKind::kLeaf) grads_[id].reset();
    node.backward = nullptr;
  }
}

template <typename T>
Tensor<T> Tape<T>::Grad(Var<T> v) const {
  if (v.id < static_cast<int>(grads_.size()) && grads_[v.id].has_value()) {
    return *grads_[v.id];
  }
  return Tensor<T>(value(v.id).shape, T(0));
}

template <typename T>
Tensor<T> Tape<T>::ExternalGrad(const Tensor<T>* external) const {
  Tensor<T> out(external->shape, T(0));
  for (size_t id = 0; id < grads_.size(); ++id) {
    const Node& node = nodes_[id];
    if (node.kind != OpKind::kLeaf || node.owned || node.value != external ||
        !grads_[id].has_value()) {
      continue;
    }
    const Tensor<T>& g = *grads_[id];
    for (int64_t i = 0; i < out.size(); ++i) out[i] += g[i];
  }
  return out;
}

template <typename T>
Tensor<T>& Tape<T>::MutableGrad(int id) {
  if (!grads_[id].has_value()) grads_[id] = Tensor<T>(value(id).shape, T(0));
  return *grads_[id];
}

template class Tape<float>;
template class Tape<double>;

}  // namespace nerfcodec
