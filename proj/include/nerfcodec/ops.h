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

// Differentiable operators recorded on a Tape.
//
// Shapes are checked eagerly; a mismatch throws ContractError. When the tape
// has finite checking enabled, an op whose output contains NaN/Inf throws
// NumericError naming the op kind and node id.

#ifndef NERFCODEC_OPS_H_
#define NERFCODEC_OPS_H_

#include <span>
#include <vector>

#include "nerfcodec/tape.h"

namespace nerfcodec {

// Elementwise, identical shapes.
template <typename T>
Var<T> Add(Var<T> a, Var<T> b);
template <typename T>
Var<T> Sub(Var<T> a, Var<T> b);
template <typename T>
Var<T> Mul(Var<T> a, Var<T> b);

// a + c and a * c for a constant scalar c (recorded as add / mul).
template <typename T>
Var<T> AddScalar(Var<T> a, T c);
template <typename T>
Var<T> MulScalar(Var<T> a, T c);

// (m x k) . (k x n), with optional transposition of either operand.
template <typename T>
Var<T> MatMul(Var<T> a, Var<T> b, bool transpose_a = false,
              bool transpose_b = false);

// x: [N, Cin, H, W], weight: [Cout, Cin, kh, kw], bias: [Cout] or invalid.
// Zero padding.
template <typename T>
Var<T> Conv2d(Var<T> x, Var<T> weight, Var<T> bias, int stride = 1,
              int padding = 0);

// x: [Cin, D, H, W], weight: [Cout, Cin, k, k, k], bias: [Cout] or invalid.
// Stride 1, zero padding.
template <typename T>
Var<T> Conv3d(Var<T> x, Var<T> weight, Var<T> bias, int padding = 1);

enum class OutOfBounds {
  // Taps outside the plane contribute zero (and receive zero gradient).
  kZero,
  // Coordinates are clamped to the plane's texel-center range.
  kClamp,
};

enum class GatherLayout {
  kPointMajor,    // output [N, C]
  kChannelMajor,  // output [C, N]
};

// Bilinear interpolation of plane [C, H, W] at N continuous texel
// coordinates (u = column, v = row; texel centers at integers). `coords`
// holds N (u, v) pairs and is not differentiated.
template <typename T>
Var<T> BilinearGather(Var<T> plane, std::span<const T> coords,
                      OutOfBounds mode,
                      GatherLayout layout = GatherLayout::kPointMajor);

// Mean over one axis; the axis is removed from the shape.
template <typename T>
Var<T> MeanPoolAxis(Var<T> a, int axis);

template <typename T>
Var<T> Concat(const std::vector<Var<T>>& parts, int axis);

// Entries [start, start + count) along `axis`; the axis is kept.
template <typename T>
Var<T> Slice(Var<T> a, int axis, int64_t start, int64_t count);

// Sum of all elements (scalar) or over one axis (axis removed).
template <typename T>
Var<T> SumReduce(Var<T> a);
template <typename T>
Var<T> SumReduce(Var<T> a, int axis);

template <typename T>
Var<T> Relu(Var<T> a);
template <typename T>
Var<T> Softplus(Var<T> a);
template <typename T>
Var<T> Sigmoid(Var<T> a);
template <typename T>
Var<T> Exp(Var<T> a);
template <typename T>
Var<T> Log(Var<T> a);
template <typename T>
Var<T> Square(Var<T> a);

// Right-aligned broadcasting: each source dim must be 1 or equal to the
// target dim; missing leading dims are added.
template <typename T>
Var<T> Broadcast(Var<T> a, const Shape& target);

// 2x bilinear upsampling of [N, C, H, W] with half-pixel alignment and edge
// clamping.
template <typename T>
Var<T> Upsample2d(Var<T> x);

template <typename T>
Var<T> Reshape(Var<T> a, const Shape& shape);

// Value-level helpers shared with non-differentiated code paths.
template <typename T>
T SoftplusValue(T x);
template <typename T>
T SigmoidValue(T x);

}  // namespace nerfcodec

#endif  // NERFCODEC_OPS_H_
