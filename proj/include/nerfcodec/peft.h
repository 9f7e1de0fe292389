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

// Parameter-efficient finetuning state: rank-R matrix x vector triplane
// deltas and low-rank MLP adapters, plus per-mode trainable sets.

#ifndef NERFCODEC_PEFT_H_
#define NERFCODEC_PEFT_H_

#include <array>
#include <string>
#include <vector>

#include "nerfcodec/mlp.h"
#include "nerfcodec/triplane.h"

namespace nerfcodec {

// Delta of plane (k, s) is sum_r v_r^s (outer) M_{k,r}^s, with the vector
// v_r^s shared by the three planes of a scale.
template <typename T>
struct BasicDeltaFactors {
  TriplaneConfig config;
  int rank = 1;
  std::array<Tensor<T>, kNumPlanes * kNumScales> m;  // [R, V_s, V_s]
  std::array<Tensor<T>, kNumScales> v;               // [R, C]

  // Number of M reals: 3 R sum(V_s^2).
  int64_t MatrixParameterCount() const;
  int64_t VectorParameterCount() const { return kNumScales * config.channels * rank; }
};

using DeltaFactors = BasicDeltaFactors<float>;

// M ~ N(0, 0.02^2), v = 0, so every materialised delta is exactly zero.
template <typename T>
BasicDeltaFactors<T> InitDelta(const TriplaneConfig& config, int rank,
                               uint64_t seed);

// [C, V, V] delta from m [R, V, V] and v [R, C].
template <typename T>
Var<T> MaterializeDelta(Var<T> m, Var<T> v);

template <typename T>
struct DeltaVars {
  std::array<Var<T>, kNumPlanes * kNumScales> m;
  std::array<Var<T>, kNumScales> v;
};

template <typename T>
DeltaVars<T> BindDelta(Tape<T>& tape, const BasicDeltaFactors<T>& delta,
                       bool requires_grad);

// Effective planes base + delta. With a zero delta the sampled features are
// bitwise those of the base.
template <typename T>
PlaneVars<T> ComposeWithDelta(const PlaneVars<T>& base,
                              const DeltaVars<T>& delta);

// Dense delta for plane (k, s) without a tape.
template <typename T>
Tensor<T> MaterializeDeltaValue(const BasicDeltaFactors<T>& delta, int k,
                                int s);

enum class FinetuneMode { kWoFt, kFullFt, kPeft, kPeftPlus };

FinetuneMode ParseFinetuneMode(const std::string& name);
const char* FinetuneModeName(FinetuneMode mode);

// Learning-rate group of a parameter tensor.
enum class ParamGroup { kPlane, kNetwork, kDensity };

struct ParamRef {
  std::string name;
  Tensor<float>* tensor = nullptr;
  ParamGroup group = ParamGroup::kNetwork;
};

// Everything a finetuning run may touch for one scene.
struct FinetuneState {
  MultiResTriplanes base;
  RadianceMlp coarse;
  RadianceMlp fine;
  DeltaFactors delta;
  LoraAdapter coarse_lora;
  LoraAdapter fine_lora;
};

// Creates zero-effect adapters and deltas for `state`.
void AttachAdapters(FinetuneState* state, int delta_rank, int lora_rank,
                    uint64_t seed);

// wo-ft: nothing. full-ft: the nine planes and both dense MLPs. peft and
// peft++: M, v and the adapter factors.
std::vector<ParamRef> TrainableParams(FinetuneState* state, FinetuneMode mode);

int64_t CountParameters(const std::vector<ParamRef>& params);

}  // namespace nerfcodec

#endif  // NERFCODEC_PEFT_H_
