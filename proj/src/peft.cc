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

#include "nerfcodec/peft.h"

#include <random>

namespace nerfcodec {

template <typename T>
int64_t BasicDeltaFactors<T>::MatrixParameterCount() const {
  return kNumPlanes * static_cast<int64_t>(rank) * config.TexelsPerPlaneSet();
}

template <typename T>
BasicDeltaFactors<T> InitDelta(const TriplaneConfig& config, int rank,
                               uint64_t seed) {
  if (rank < 1) throw ContractError("delta: rank must be >= 1");
  BasicDeltaFactors<T> d;
  d.config = config;
  d.rank = rank;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 0.02);
  for (int k = 0; k < kNumPlanes; ++k) {
    for (int s = 0; s < kNumScales; ++s) {
      const int v = config.resolutions[s];
      Tensor<T>& m = d.m[PlaneIndex(k, s)];
      m = Tensor<T>({rank, v, v});
      for (T& x : m.data) x = static_cast<T>(dist(rng));
    }
  }
  for (int s = 0; s < kNumScales; ++s) {
    d.v[s] = Tensor<T>({rank, config.channels});
  }
  return d;
}

template <typename T>
Var<T> MaterializeDelta(Var<T> m, Var<T> v) {
  const Shape& ms = m.shape();
  const Shape& vs = v.shape();
  if (ms.size() != 3 || vs.size() != 2 || ms[0] != vs[0]) {
    throw ContractError("materialize_delta: m must be [R, V, V] and v [R, C]");
  }
  Var<T> flat = Reshape(m, {ms[0], ms[1] * ms[2]});
  return Reshape(MatMul(v, flat, true, false), {vs[1], ms[1], ms[2]});
}

template <typename T>
DeltaVars<T> BindDelta(Tape<T>& tape, const BasicDeltaFactors<T>& delta,
                       bool requires_grad) {
  DeltaVars<T> vars;
  for (size_t i = 0; i < delta.m.size(); ++i) {
    vars.m[i] = tape.Leaf(&delta.m[i], requires_grad);
  }
  for (size_t s = 0; s < delta.v.size(); ++s) {
    vars.v[s] = tape.Leaf(&delta.v[s], requires_grad);
  }
  return vars;
}

template <typename T>
PlaneVars<T> ComposeWithDelta(const PlaneVars<T>& base,
                              const DeltaVars<T>& delta) {
  PlaneVars<T> out;
  for (int k = 0; k < kNumPlanes; ++k) {
    for (int s = 0; s < kNumScales; ++s) {
      const int i = PlaneIndex(k, s);
      Var<T> d = MaterializeDelta(delta.m[i], delta.v[s]);
      if (d.shape() != base[i].shape()) {
        throw ContractError("compose_with_delta: delta shape " +
                            ShapeString(d.shape()) + " does not match plane " +
                            ShapeString(base[i].shape()));
      }
      out[i] = Add(base[i], d);
    }
  }
  return out;
}

template <typename T>
Tensor<T> MaterializeDeltaValue(const BasicDeltaFactors<T>& delta, int k,
                                int s) {
  Tape<T> tape(false);
  return MaterializeDelta(tape.Leaf(&delta.m[PlaneIndex(k, s)], false),
                          tape.Leaf(&delta.v[s], false))
      .value();
}

FinetuneMode ParseFinetuneMode(const std::string& name) {
  if (name == "wo-ft") return FinetuneMode::kWoFt;
  if (name == "full-ft") return FinetuneMode::kFullFt;
  if (name == "peft") return FinetuneMode::kPeft;
  if (name == "peft++") return FinetuneMode::kPeftPlus;
  throw ContractError("unknown finetuning mode '" + name + "'");
}

const char* FinetuneModeName(FinetuneMode mode) {
  switch (mode) {
    case FinetuneMode::kWoFt:
      return "wo-ft";
    case FinetuneMode::kFullFt:
      return "full-ft";
    case FinetuneMode::kPeft:
      return "peft";
    case FinetuneMode::kPeftPlus:
      return "peft++";
  }
  return "?";
}

void AttachAdapters(FinetuneState* state, int delta_rank, int lora_rank,
                    uint64_t seed) {
  state->delta = InitDelta<float>(state->base.config, delta_rank, seed);
  state->coarse_lora = WrapMlp(state->coarse, lora_rank, seed + 1);
  state->fine_lora = WrapMlp(state->fine, lora_rank, seed + 2);
}

namespace {

void AddMlp(const std::string& prefix, RadianceMlp* mlp,
            std::vector<ParamRef>* out) {
  for (size_t i = 0; i < mlp->layers.size(); ++i) {
    const std::string n = prefix + std::to_string(i);
    out->push_back({n + ".w", &mlp->layers[i].weight, ParamGroup::kNetwork});
    out->push_back({n + ".b", &mlp->layers[i].bias, ParamGroup::kNetwork});
  }
}

void AddAdapter(const std::string& prefix, LoraAdapter* lora,
                std::vector<ParamRef>* out) {
  for (size_t i = 0; i < lora->layers.size(); ++i) {
    const std::string n = prefix + std::to_string(i);
    out->push_back({n + ".a", &lora->layers[i].a, ParamGroup::kNetwork});
    out->push_back({n + ".b", &lora->layers[i].b, ParamGroup::kNetwork});
  }
}

}  // namespace

std::vector<ParamRef> TrainableParams(FinetuneState* state, FinetuneMode mode) {
  std::vector<ParamRef> out;
  switch (mode) {
    case FinetuneMode::kWoFt:
      break;
    case FinetuneMode::kFullFt:
      for (size_t i = 0; i < state->base.planes.size(); ++i) {
        out.push_back({"plane" + std::to_string(i), &state->base.planes[i],
                       ParamGroup::kPlane});
      }
      AddMlp("coarse", &state->coarse, &out);
      AddMlp("fine", &state->fine, &out);
      break;
    case FinetuneMode::kPeft:
    case FinetuneMode::kPeftPlus:
      if (state->delta.m[0].size() == 0 || state->coarse_lora.empty()) {
        throw ContractError("trainable_params: adapters are not attached");
      }
      for (size_t i = 0; i < state->delta.m.size(); ++i) {
        out.push_back({"m" + std::to_string(i), &state->delta.m[i],
                       ParamGroup::kPlane});
      }
      for (size_t s = 0; s < state->delta.v.size(); ++s) {
        out.push_back({"v" + std::to_string(s), &state->delta.v[s],
                       ParamGroup::kPlane});
      }
      AddAdapter("coarse_lora", &state->coarse_lora, &out);
      AddAdapter("fine_lora", &state->fine_lora, &out);
      break;
  }
  return out;
}

int64_t CountParameters(const std::vector<ParamRef>& params) {
  int64_t n = 0;
  for (const auto& p : params) n += p.tensor->size();
  return n;
}

#define NERFCODEC_INSTANTIATE_PEFT(T)                                         \
  template struct BasicDeltaFactors<T>;                                       \
  template BasicDeltaFactors<T> InitDelta<T>(const TriplaneConfig&, int,      \
                                             uint64_t);                       \
  template Var<T> MaterializeDelta<T>(Var<T>, Var<T>);                        \
  template DeltaVars<T> BindDelta<T>(Tape<T>&, const BasicDeltaFactors<T>&,   \
                                     bool);                                   \
  template PlaneVars<T> ComposeWithDelta<T>(const PlaneVars<T>&,              \
                                            const DeltaVars<T>&);             \
  template Tensor<T> MaterializeDeltaValue<T>(const BasicDeltaFactors<T>&,    \
                                              int, int);

NERFCODEC_INSTANTIATE_PEFT(float)
NERFCODEC_INSTANTIATE_PEFT(double)

}  // namespace nerfcodec
