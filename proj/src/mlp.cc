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

#include "nerfcodec/mlp.h"

#include <cmath>
#include <random>

namespace nerfcodec {

MlpProfile ParseMlpProfile(const std::string& name) {
  if (name == "objaverse") return MlpProfile::kObjaverse;
  if (name == "shapenet") return MlpProfile::kShapeNet;
  if (name == "desk") return MlpProfile::kDesk;
  throw ContractError("unknown MLP profile '" + name + "'");
}

const char* MlpProfileName(MlpProfile profile) {
  switch (profile) {
    case MlpProfile::kObjaverse:
      return "objaverse";
    case MlpProfile::kShapeNet:
      return "shapenet";
    case MlpProfile::kDesk:
      return "desk";
  }
  return "?";
}

MlpConfig MlpConfig::ForProfile(MlpProfile profile, int channels) {
  MlpConfig c;
  c.feature_dim = 3 * channels;
  switch (profile) {
    case MlpProfile::kObjaverse:
      c.hidden = 512;
      c.depth = 8;
      break;
    case MlpProfile::kShapeNet:
      c.hidden = 256;
      c.depth = 6;
      break;
    case MlpProfile::kDesk:
      c.hidden = 32;
      c.depth = 4;
      break;
    default:
      throw ContractError("unknown MLP profile id");
  }
  return c;
}

std::pair<int, int> MlpConfig::LayerShape(int i) const {
  if (depth < 3 || hidden < 2) throw ContractError("mlp: depth >= 3 required");
  if (i == 0) return {hidden, feature_dim + 3};
  if (i < TrunkLayers()) return {hidden, hidden};
  if (i == DensityLayer()) return {1, hidden};
  if (i == ColorHiddenLayer()) return {hidden / 2, hidden + PeDim()};
  if (i == ColorOutLayer()) return {3, hidden / 2};
  throw ContractError("mlp: layer index out of range");
}

int64_t MlpConfig::DenseParameterCount() const {
  int64_t n = 0;
  for (int i = 0; i < NumLayers(); ++i) {
    const auto [out, in] = LayerShape(i);
    n += static_cast<int64_t>(out) * (in + 1);
  }
  return n;
}

int64_t AdapterParameterCount(const MlpConfig& config, int rank) {
  int64_t n = 0;
  for (int i = 0; i < config.NumLayers(); ++i) {
    const auto [out, in] = config.LayerShape(i);
    n += static_cast<int64_t>(rank) * (out + in);
  }
  return n;
}

template <typename T>
BasicRadianceMlp<T> BasicRadianceMlp<T>::Zeros(const MlpConfig& config) {
  BasicRadianceMlp mlp;
  mlp.config = config;
  for (int i = 0; i < config.NumLayers(); ++i) {
    const auto [out, in] = config.LayerShape(i);
    mlp.layers.push_back({Tensor<T>({out, in}), Tensor<T>({out})});
  }
  return mlp;
}

template <typename T>
BasicRadianceMlp<T> BasicRadianceMlp<T>::Init(const MlpConfig& config,
                                              uint64_t seed) {
  BasicRadianceMlp mlp = Zeros(config);
  std::mt19937_64 rng(seed);
  for (auto& layer : mlp.layers) {
    const int64_t in = layer.weight.shape[1];
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / in));
    for (T& w : layer.weight.data) w = static_cast<T>(dist(rng));
  }
  // Start from near-empty space (sigma ~ 0.018) rather than fog.
  mlp.layers[config.DensityLayer()].bias[0] = T(-4);
  return mlp;
}

template <typename T>
int64_t BasicLoraAdapter<T>::ParameterCount() const {
  int64_t n = 0;
  for (const auto& l : layers) n += l.a.size() + l.b.size();
  return n;
}

template <typename T>
BasicLoraAdapter<T> WrapMlp(const BasicRadianceMlp<T>& mlp, int rank,
                            uint64_t seed) {
  if (rank < 1) throw ContractError("lora: rank must be >= 1");
  BasicLoraAdapter<T> adapter;
  adapter.rank = rank;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 0.02);
  for (const auto& layer : mlp.layers) {
    const int64_t out = layer.weight.shape[0], in = layer.weight.shape[1];
    BasicLoraLayer<T> l{Tensor<T>({out, rank}), Tensor<T>({rank, in})};
    for (T& v : l.b.data) v = static_cast<T>(dist(rng));
    adapter.layers.push_back(std::move(l));
  }
  return adapter;
}

template <typename T>
MlpVars<T> BindMlp(Tape<T>& tape, const BasicRadianceMlp<T>& mlp,
                   const BasicLoraAdapter<T>* adapter, bool train_base,
                   bool train_adapter) {
  if (adapter != nullptr && !adapter->empty() &&
      adapter->layers.size() != mlp.layers.size()) {
    throw ContractError("lora: adapter does not match the MLP");
  }
  MlpVars<T> vars;
  vars.config = mlp.config;
  for (size_t i = 0; i < mlp.layers.size(); ++i) {
    Var<T> w = tape.Leaf(&mlp.layers[i].weight, train_base);
    if (adapter != nullptr && !adapter->empty()) {
      Var<T> a = tape.Leaf(&adapter->layers[i].a, train_adapter);
      Var<T> b = tape.Leaf(&adapter->layers[i].b, train_adapter);
      vars.lora_a.push_back(a);
      vars.lora_b.push_back(b);
      w = Add(w, MatMul(a, b));
    }
    vars.weights.push_back(w);
    vars.biases.push_back(tape.Leaf(&mlp.layers[i].bias, train_base));
  }
  return vars;
}

template <typename T>
BasicRadianceMlp<T> MergeAdapter(const BasicRadianceMlp<T>& mlp,
                                 const BasicLoraAdapter<T>& adapter) {
  Tape<T> tape(false);
  const MlpVars<T> vars = BindMlp(tape, mlp, &adapter, false, false);
  BasicRadianceMlp<T> out = mlp;
  for (size_t i = 0; i < out.layers.size(); ++i) {
    out.layers[i].weight = vars.weights[i].value();
  }
  return out;
}

template <typename T>
std::vector<T> PositionalEncode(std::span<const T> dirs, int frequencies) {
  const size_t n = dirs.size() / 3;
  const int dim = 3 + 6 * frequencies;
  std::vector<T> out(n * dim);
  for (size_t i = 0; i < n; ++i) {
    T* o = out.data() + i * dim;
    for (int a = 0; a < 3; ++a) o[a] = dirs[3 * i + a];
    for (int j = 0; j < frequencies; ++j) {
      const T scale = static_cast<T>(std::ldexp(M_PI, j));
      for (int a = 0; a < 3; ++a) {
        o[3 + 6 * j + a] = std::sin(scale * dirs[3 * i + a]);
        o[6 + 6 * j + a] = std::cos(scale * dirs[3 * i + a]);
      }
    }
  }
  return out;
}

namespace {

template <typename T>
Var<T> Dense(Var<T> x, Var<T> w, Var<T> b) {
  Var<T> y = MatMul(x, w, false, true);
  return Add(y, Broadcast(b, y.shape()));
}

}  // namespace

template <typename T>
MlpOutput<T> EvalPoints(const MlpVars<T>& mlp, Var<T> features,
                        std::span<const T> points, std::span<const T> pe) {
  const MlpConfig& c = mlp.config;
  const int64_t n = features.shape()[0];
  if (features.shape() != Shape{n, c.feature_dim} ||
      static_cast<int64_t>(points.size()) != 3 * n ||
      static_cast<int64_t>(pe.size()) != n * c.PeDim()) {
    throw ContractError("eval_point: input dimensions do not match the MLP");
  }
  Tape<T>& tape = *features.tape;
  Var<T> p = tape.Constant(
      Tensor<T>({n, 3}, std::vector<T>(points.begin(), points.end())));
  Var<T> h = Concat<T>({features, p}, 1);
  for (int i = 0; i < c.TrunkLayers(); ++i) {
    h = Relu(Dense(h, mlp.weights[i], mlp.biases[i]));
  }
  MlpOutput<T> out;
  const int d = c.DensityLayer();
  out.sigma = Softplus(Dense(h, mlp.weights[d], mlp.biases[d]));
  Var<T> pev = tape.Constant(
      Tensor<T>({n, c.PeDim()}, std::vector<T>(pe.begin(), pe.end())));
  const int ch = c.ColorHiddenLayer(), co = c.ColorOutLayer();
  Var<T> g = Relu(Dense(Concat<T>({h, pev}, 1), mlp.weights[ch], mlp.biases[ch]));
  out.rgb = Sigmoid(Dense(g, mlp.weights[co], mlp.biases[co]));
  return out;
}

#define NERFCODEC_INSTANTIATE_MLP(T)                                          \
  template struct BasicRadianceMlp<T>;                                        \
  template struct BasicLoraAdapter<T>;                                        \
  template BasicLoraAdapter<T> WrapMlp<T>(const BasicRadianceMlp<T>&, int,    \
                                          uint64_t);                          \
  template MlpVars<T> BindMlp<T>(Tape<T>&, const BasicRadianceMlp<T>&,        \
                                 const BasicLoraAdapter<T>*, bool, bool);     \
  template BasicRadianceMlp<T> MergeAdapter<T>(const BasicRadianceMlp<T>&,    \
                                               const BasicLoraAdapter<T>&);   \
  template std::vector<T> PositionalEncode<T>(std::span<const T>, int);       \
  template MlpOutput<T> EvalPoints<T>(const MlpVars<T>&, Var<T>,              \
                                      std::span<const T>, std::span<const T>);

NERFCODEC_INSTANTIATE_MLP(float)
NERFCODEC_INSTANTIATE_MLP(double)

}  // namespace nerfcodec
