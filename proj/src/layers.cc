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

#include "nerfcodec/layers.h"

#include <cmath>

namespace nerfcodec {

template <typename T>
BasicConv<T> InitConv(int out, int in, int kernel, int dims,
                      std::mt19937_64& rng, double gain) {
  if (out <= 0 || in <= 0 || kernel <= 0 || (dims != 2 && dims != 3)) {
    throw ContractError("InitConv: bad geometry");
  }
  Shape shape = {out, in, kernel, kernel};
  if (dims == 3) shape.push_back(kernel);
  BasicConv<T> conv{Tensor<T>(shape), Tensor<T>({out})};
  const double fan_in = static_cast<double>(NumElements(shape) / out);
  std::normal_distribution<double> dist(0.0, std::sqrt(gain / fan_in));
  for (auto& w : conv.weight.data) w = static_cast<T>(dist(rng));
  return conv;
}

template BasicConv<float> InitConv<float>(int, int, int, int,
                                          std::mt19937_64&, double);
template BasicConv<double> InitConv<double>(int, int, int, int,
                                            std::mt19937_64&, double);

}  // namespace nerfcodec
