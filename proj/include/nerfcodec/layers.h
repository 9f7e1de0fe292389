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

// Convolution parameter blocks shared by the encoder, the vector quantizer and
// the triplane generator.

#ifndef NERFCODEC_LAYERS_H_
#define NERFCODEC_LAYERS_H_

#include <random>
#include <string>
#include <vector>

#include "nerfcodec/ops.h"
#include "nerfcodec/tape.h"
#include "nerfcodec/tensor.h"

namespace nerfcodec {

template <typename T>
struct BasicConv {
  Tensor<T> weight;  // [out, in, k, k] or [out, in, k, k, k]
  Tensor<T> bias;    // [out]

  int out_channels() const { return static_cast<int>(weight.dim(0)); }
  int in_channels() const { return static_cast<int>(weight.dim(1)); }
};

// Normal weights with variance gain / fan_in and zero bias. The default gain
// is He init; convs without a following ReLU use 1. `dims` is 2 or 3.
template <typename T>
BasicConv<T> InitConv(int out, int in, int kernel, int dims,
                      std::mt19937_64& rng, double gain = 2.0);

template <typename T>
struct ConvVars {
  Var<T> weight;
  Var<T> bias;
};

template <typename T>
ConvVars<T> BindConv(Tape<T>& tape, const BasicConv<T>& conv,
                     bool requires_grad) {
  return {tape.Leaf(&conv.weight, requires_grad),
          tape.Leaf(&conv.bias, requires_grad)};
}

// "Same" padding for odd kernels.
template <typename T>
Var<T> ApplyConv2d(const ConvVars<T>& conv, Var<T> x, int stride = 1) {
  const int k = static_cast<int>(conv.weight.shape()[2]);
  return Conv2d(x, conv.weight, conv.bias, stride, k / 2);
}

template <typename T>
Var<T> ApplyConv3d(const ConvVars<T>& conv, Var<T> x) {
  const int k = static_cast<int>(conv.weight.shape()[2]);
  return Conv3d(x, conv.weight, conv.bias, k / 2);
}

// A parameter tensor with a stable name, used for checkpoints, archives and
// the optimizer.
template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T>* tensor = nullptr;
};

template <typename T>
void AppendConv(const std::string& name, BasicConv<T>& conv,
                std::vector<NamedTensor<T>>* out) {
  out->push_back({name + ".weight", &conv.weight});
  out->push_back({name + ".bias", &conv.bias});
}

}  // namespace nerfcodec

#endif  // NERFCODEC_LAYERS_H_
