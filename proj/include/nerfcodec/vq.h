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

// Vector quantization of axis-pooled planes: strided convs to low-resolution
// codes, nearest-neighbour lookup in a learned codebook, and upsampling back
// to plane resolution.

#ifndef NERFCODEC_VQ_H_
#define NERFCODEC_VQ_H_

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "nerfcodec/layers.h"

namespace nerfcodec {

struct VqConfig {
  int channels = 32;     // C
  int code_dim = 16;     // C'
  int codebook_size = 1024;  // K
  int resolution = 64;   // V; codes are V / 4

  int code_resolution() const { return resolution / 4; }
  // 3 V'^2
  int64_t NumCodes() const {
    return 3LL * code_resolution() * code_resolution();
  }
  Shape CodeShape() const {
    return {3, code_dim, code_resolution(), code_resolution()};
  }
  bool operator==(const VqConfig&) const = default;
};

template <typename T>
struct BasicVqWeights {
  VqConfig config;
  BasicConv<T> down1;  // C -> C', stride 2
  BasicConv<T> down2;  // C' -> C', stride 2
  Tensor<T> codebook;  // [K, C']
  BasicConv<T> up1;    // C' -> C after 2x upsampling
  BasicConv<T> up2;    // C -> C after 2x upsampling

  static BasicVqWeights Init(const VqConfig& config, uint64_t seed);
  std::vector<NamedTensor<T>> Params();
};

template <typename T>
struct VqVars {
  VqConfig config;
  ConvVars<T> down1, down2, up1, up2;
  Var<T> codebook;
};

template <typename T>
VqVars<T> BindVq(Tape<T>& tape, const BasicVqWeights<T>& w,
                 bool train_convs, bool train_codebook);

// Three [C, V, V] planes to codes l of shape [3, C', V/4, V/4]. The planes
// share the conv weights.
template <typename T>
Var<T> Downsample(const VqVars<T>& vq, const std::array<Var<T>, 3>& planes);

// Nearest codebook row for each of the 3 V'^2 code vectors of `codes`
// ([3, C', V', V']), by squared distance accumulated in double; ties go to
// the smallest index. Indices are plane-major, then row, then column.
template <typename T>
std::vector<int32_t> NearestCodes(const Tensor<T>& codes,
                                  const Tensor<T>& codebook);

// e* = the codebook rows for `indices`, laid out like the codes.
template <typename T>
Var<T> GatherCodes(Var<T> codebook, std::span<const int32_t> indices,
                   const Shape& code_shape);

template <typename T>
struct Quantized {
  std::vector<int32_t> indices;
  Var<T> codes;  // e*
};

template <typename T>
Quantized<T> Quantize(Var<T> codes, Var<T> codebook);

// mean((sg[l] - e*)^2) + commit * mean((sg[e*] - l)^2). The first term
// reaches only the codebook, the second only the producers of l.
template <typename T>
Var<T> VqLoss(Var<T> codes, Var<T> quantized, T commit);

// [3, C', V', V'] codes to three [C, V, V] planes.
template <typename T>
std::array<Var<T>, 3> Upsample(const VqVars<T>& vq, Var<T> codes);

// Re-seeds codebook rows that went unused for a full epoch with code vectors
// seen during that epoch.
class DeadCodeMonitor {
 public:
  DeadCodeMonitor(int codebook_size, int code_dim);

  // Records the indices chosen for one batch and keeps some of its code
  // vectors ([3, C', V', V']) as replacement candidates.
  void Observe(std::span<const int32_t> indices, const Tensor<float>& codes,
               std::mt19937_64& rng);
  // Ends an epoch: rows not used since the previous call are overwritten by
  // random candidates. Returns the number of rows re-seeded.
  int EndEpoch(Tensor<float>* codebook, std::mt19937_64& rng);
  // Overwrites every row with a random candidate and starts a new epoch.
  // Returns the number of rows written (0 when nothing was observed).
  int ReseedAll(Tensor<float>* codebook, std::mt19937_64& rng);

 private:
  int code_dim_;
  std::vector<uint8_t> used_;
  std::vector<std::vector<float>> candidates_;
};

using VqWeights = BasicVqWeights<float>;

}  // namespace nerfcodec

#endif  // NERFCODEC_VQ_H_
