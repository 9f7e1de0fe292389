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

// Radiance MLP decoder with optional low-rank adapters.
//
// Layers, in order: a relu trunk of depth-2 linear layers fed with
// f_tri(p) ++ p, a density head (softplus), a hidden color layer fed with the
// trunk feature ++ PE(d) (relu) and an RGB layer (sigmoid). Density never
// sees the view direction.

#ifndef NERFCODEC_MLP_H_
#define NERFCODEC_MLP_H_

#include <cstdint>
#include <span>
#include <vector>

#include "nerfcodec/ops.h"
#include "nerfcodec/tape.h"
#include "nerfcodec/tensor.h"

namespace nerfcodec {

enum class MlpProfile : int { kObjaverse = 0, kShapeNet = 1, kDesk = 2 };

MlpProfile ParseMlpProfile(const std::string& name);
const char* MlpProfileName(MlpProfile profile);

struct MlpConfig {
  int feature_dim = 96;  // 3C
  int hidden = 512;
  int depth = 8;
  int pe_frequencies = 4;

  static MlpConfig ForProfile(MlpProfile profile, int channels);

  int TrunkLayers() const { return depth - 2; }
  int DensityLayer() const { return depth - 2; }
  int ColorHiddenLayer() const { return depth - 1; }
  int ColorOutLayer() const { return depth; }
  int NumLayers() const { return depth + 1; }
  int PeDim() const { return 3 + 6 * pe_frequencies; }
  // (d_out, d_in) of layer i.
  std::pair<int, int> LayerShape(int i) const;
  int64_t DenseParameterCount() const;
  bool operator==(const MlpConfig&) const = default;
};

template <typename T>
struct BasicLinear {
  Tensor<T> weight;  // [out, in]
  Tensor<T> bias;    // [out]
};

template <typename T>
struct BasicRadianceMlp {
  MlpConfig config;
  std::vector<BasicLinear<T>> layers;

  static BasicRadianceMlp Zeros(const MlpConfig& config);
  // He-normal weights, zero biases.
  static BasicRadianceMlp Init(const MlpConfig& config, uint64_t seed);
};

// Low-rank update of one linear layer: delta = a * b.
template <typename T>
struct BasicLoraLayer {
  Tensor<T> a;  // [out, r], initialised to zero
  Tensor<T> b;  // [r, in], initialised N(0, 0.02^2)
};

template <typename T>
struct BasicLoraAdapter {
  int rank = 0;
  std::vector<BasicLoraLayer<T>> layers;

  bool empty() const { return layers.empty(); }
  int64_t ParameterCount() const;
};

using RadianceMlp = BasicRadianceMlp<float>;
using LoraAdapter = BasicLoraAdapter<float>;

// Attaches a zero-initialised adapter of `rank` to every layer of `mlp`.
template <typename T>
BasicLoraAdapter<T> WrapMlp(const BasicRadianceMlp<T>& mlp, int rank,
                            uint64_t seed);

// Number of adapter reals for one MLP of `config` at `rank`.
int64_t AdapterParameterCount(const MlpConfig& config, int rank);

// Effective per-layer weight and bias nodes.
template <typename T>
struct MlpVars {
  MlpConfig config;
  std::vector<Var<T>> weights;
  std::vector<Var<T>> biases;
  // Adapter factor leaves (empty without an adapter).
  std::vector<Var<T>> lora_a;
  std::vector<Var<T>> lora_b;
};

// Binds `mlp` (and optionally `adapter`) to the tape. Effective weights are
// W + a b when an adapter is given.
template <typename T>
MlpVars<T> BindMlp(Tape<T>& tape, const BasicRadianceMlp<T>& mlp,
                   const BasicLoraAdapter<T>* adapter, bool train_base,
                   bool train_adapter);

// W + a b materialised without a tape.
template <typename T>
BasicRadianceMlp<T> MergeAdapter(const BasicRadianceMlp<T>& mlp,
                                 const BasicLoraAdapter<T>& adapter);

// d ++ sin(2^j pi d) ++ cos(2^j pi d) for j = 0..L-1, for each of N
// directions.
template <typename T>
std::vector<T> PositionalEncode(std::span<const T> dirs, int frequencies);

template <typename T>
struct MlpOutput {
  Var<T> rgb;    // [N, 3]
  Var<T> sigma;  // [N, 1]
};

// features: [N, 3C]; points: N x 3; pe: N x PeDim().
template <typename T>
MlpOutput<T> EvalPoints(const MlpVars<T>& mlp, Var<T> features,
                        std::span<const T> points, std::span<const T> pe);

}  // namespace nerfcodec

#endif  // NERFCODEC_MLP_H_
