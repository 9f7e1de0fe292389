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

#include "nerfcodec/optim.h"

#include <cmath>
#include <string>

namespace nerfcodec {

double LearningRates::For(ParamGroup group) const {
  switch (group) {
    case ParamGroup::kPlane: return plane;
    case ParamGroup::kNetwork: return network;
    case ParamGroup::kDensity: return density;
  }
  return network;
}

void Adam::Step(const std::vector<ParamRef>& params,
                const std::vector<Tensor<float>>& grads,
                const LearningRates& lr) {
  if (params.size() != grads.size()) {
    throw ContractError("Adam: one gradient per parameter required");
  }
  if (slots_.empty() && steps_ == 0) {
    for (const auto& p : params) {
      slots_.push_back({p.name, std::vector<float>(p.tensor->size(), 0.0f),
                        std::vector<float>(p.tensor->size(), 0.0f)});
    }
  }
  if (slots_.size() != params.size()) {
    throw ContractError("Adam: parameter list changed between steps");
  }
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  const float b1 = static_cast<float>(beta1_), b2 = static_cast<float>(beta2_);
  for (size_t i = 0; i < params.size(); ++i) {
    Slot& s = slots_[i];
    Tensor<float>& x = *params[i].tensor;
    const Tensor<float>& g = grads[i];
    if (s.name != params[i].name || g.shape != x.shape ||
        static_cast<int64_t>(s.m.size()) != x.size()) {
      throw ContractError("Adam: mismatch for parameter " + params[i].name);
    }
    const float step = static_cast<float>(lr.For(params[i].group) / c1);
    const float inv_c2 = static_cast<float>(1.0 / c2);
    const float eps = static_cast<float>(eps_);
    for (int64_t j = 0; j < x.size(); ++j) {
      s.m[j] = b1 * s.m[j] + (1.0f - b1) * g[j];
      s.v[j] = b2 * s.v[j] + (1.0f - b2) * g[j] * g[j];
      x[j] -= step * s.m[j] / (std::sqrt(s.v[j] * inv_c2) + eps);
    }
  }
}

void Adam::Serialize(ByteWriter& w) const {
  w.U32(static_cast<uint32_t>(steps_));
  w.U32(static_cast<uint32_t>(slots_.size()));
  for (const auto& s : slots_) {
    w.Str(s.name);
    w.U32(static_cast<uint32_t>(s.m.size()));
    w.F32s(s.m);
    w.F32s(s.v);
  }
}

void Adam::Deserialize(ByteReader& r) {
  steps_ = r.U32();
  slots_.resize(r.U32());
  for (auto& s : slots_) {
    s.name = r.Str();
    const uint32_t n = r.U32();
    if (n > r.remaining() / 8) throw FormatError("Adam state: truncated");
    s.m.resize(n);
    s.v.resize(n);
    r.F32s(s.m);
    r.F32s(s.v);
  }
}

}  // namespace nerfcodec
