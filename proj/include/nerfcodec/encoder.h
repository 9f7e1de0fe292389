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

// Feed-forward encoder: posed images to a feature volume, axis-pooled planes
// and, through the generator, multi-resolution triplanes.
//
// Volumes are [C, Z, Y, X] over a V^3 grid whose points sit at the centers of
// V equal cells of [-1, 1]^3.

#ifndef NERFCODEC_ENCODER_H_
#define NERFCODEC_ENCODER_H_

#include <array>
#include <cstdint>
#include <vector>

#include "nerfcodec/layers.h"
#include "nerfcodec/scene.h"
#include "nerfcodec/triplane.h"

namespace nerfcodec {

struct EncoderConfig {
  int channels = 32;
  int volume_res = 64;
  std::array<int, 3> pyramid = {16, 32, 32};

  bool operator==(const EncoderConfig&) const = default;
};

template <typename T>
struct BasicEncoderWeights {
  EncoderConfig config;
  BasicConv<T> stem;                  // 3 -> p0
  BasicConv<T> down1;                 // p0 -> p1, stride 2
  BasicConv<T> down2;                 // p1 -> p2, stride 2
  std::array<BasicConv<T>, 3> lateral;  // 1x1, p_i -> C
  BasicConv<T> head;                  // C -> C
  BasicConv<T> agg1;                  // 3x3x3, C -> C
  BasicConv<T> agg2;

  static BasicEncoderWeights Init(const EncoderConfig& config, uint64_t seed);
  std::vector<NamedTensor<T>> Params();
};

template <typename T>
struct EncoderVars {
  EncoderConfig config;
  ConvVars<T> stem, down1, down2, head, agg1, agg2;
  std::array<ConvVars<T>, 3> lateral;
};

template <typename T>
EncoderVars<T> BindEncoder(Tape<T>& tape, const BasicEncoderWeights<T>& w,
                           bool requires_grad);

// [1, 3, H, W] tensor of the image colors.
template <typename T>
Tensor<T> ImageTensor(const Image& image);

// Feature map [C, H, W] of one image.
template <typename T>
Var<T> ExtractFeatureMap(const EncoderVars<T>& enc, const Image& image);

// One feature map per view with shared weights. Throws ContractError when
// the list is empty or image sizes differ.
template <typename T>
std::vector<Var<T>> ExtractFeatures(const EncoderVars<T>& enc,
                                    const std::vector<const CameraView*>& views);

// 3 x V^3 world coordinates, x fastest.
template <typename T>
std::vector<T> GridCoordinates(int resolution);

template <typename T>
struct UnprojectedVolume {
  Var<T> features;  // [C, V, V, V]; zero where the mask is 0
  Tensor<T> mask;   // [V, V, V], 1 inside the view frustum
};

template <typename T>
UnprojectedVolume<T> Unproject(Var<T> feature_map, const CameraView& view,
                               int resolution);

// Per grid point mean over the views that see it (zero where none does).
// Views are summed in an order fixed by their content, so the result does
// not depend on the input order.
template <typename T>
Var<T> MaskedMean(const std::vector<UnprojectedVolume<T>>& volumes);

// MaskedMean followed by the residual 3D conv stack.
template <typename T>
Var<T> Aggregate(const EncoderVars<T>& enc,
                 const std::vector<UnprojectedVolume<T>>& volumes);

// (f_xy, f_yz, f_xz): means over z, x and y of a [C, Z, Y, X] volume, laid
// out as [C, y, x], [C, z, y] and [C, z, x].
template <typename T>
std::array<Var<T>, 3> AxisPool(Var<T> volume);

// Images and poses to pooled planes at the volume resolution.
template <typename T>
std::array<Var<T>, 3> EncodeViews(const EncoderVars<T>& enc,
                                  const std::vector<const CameraView*>& views);

// Hierarchical triplane generator. Scale s runs a cross-plane block and a
// residual refinement; scales are linked by 2x upsampling and a conv.
template <typename T>
struct BasicGeneratorWeights {
  TriplaneConfig config;
  // aware[s][k]: conv over [plane k, pooled partners] (3C -> C).
  std::array<std::array<BasicConv<T>, kNumPlanes>, kNumScales> aware;
  std::array<BasicConv<T>, kNumScales> refine_a;
  std::array<BasicConv<T>, kNumScales> refine_b;
  std::array<BasicConv<T>, kNumScales - 1> up;

  static BasicGeneratorWeights Init(const TriplaneConfig& config,
                                    uint64_t seed);
  std::vector<NamedTensor<T>> Params();
};

template <typename T>
struct GeneratorVars {
  TriplaneConfig config;
  std::array<std::array<ConvVars<T>, kNumPlanes>, kNumScales> aware;
  std::array<ConvVars<T>, kNumScales> refine_a, refine_b;
  std::array<ConvVars<T>, kNumScales - 1> up;
};

template <typename T>
GeneratorVars<T> BindGenerator(Tape<T>& tape,
                               const BasicGeneratorWeights<T>& w,
                               bool requires_grad);

// For each plane, concatenates it with the axis-pooled summaries of the other
// two planes broadcast back over the missing axis: [3C, V, V] per plane.
template <typename T>
std::array<Var<T>, 3> CrossPlaneInputs(const std::array<Var<T>, 3>& planes);

// Nine planes from three [C, V1, V1] planes.
template <typename T>
PlaneVars<T> GenerateTriplanes(const GeneratorVars<T>& gen,
                               const std::array<Var<T>, 3>& planes);

using EncoderWeights = BasicEncoderWeights<float>;
using GeneratorWeights = BasicGeneratorWeights<float>;

}  // namespace nerfcodec

#endif  // NERFCODEC_ENCODER_H_
