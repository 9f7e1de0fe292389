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

// Adam with per-group learning rates.

#ifndef NERFCODEC_OPTIM_H_
#define NERFCODEC_OPTIM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "nerfcodec/bytes.h"
#include "nerfcodec/peft.h"

namespace nerfcodec {

struct LearningRates {
  double plane = 3e-2;
  double network = 3e-3;
  double density = 1e-2;

  double For(ParamGroup group) const;
};

class Adam {
 public:
  Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // One update of every tensor in `params` with the matching gradient. The
  // parameter list must keep the same names and shapes between steps.
  void Step(const std::vector<ParamRef>& params,
            const std::vector<Tensor<float>>& grads, const LearningRates& lr);

  int64_t steps() const { return steps_; }

  void Serialize(ByteWriter& w) const;
  void Deserialize(ByteReader& r);

 private:
  struct Slot {
    std::string name;
    std::vector<float> m;
    std::vector<float> v;
  };

  double beta1_, beta2_, eps_;
  int64_t steps_ = 0;
  std::vector<Slot> slots_;
};

}  // namespace nerfcodec

#endif  // NERFCODEC_OPTIM_H_
