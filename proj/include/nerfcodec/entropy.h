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

// Learned factorized density model, rate estimate and a range coder for
// integer streams.
//
// Each stream has a monotone CDF c(x) = sigmoid(f3(f2(f1(x)))) with
//   f1: R -> R^3, f2: R^3 -> R^3, f3: R^3 -> R,
//   fk(x) = gk(softplus(Hk) x + bk),  gk(y) = y + tanh(ak) * tanh(y)  (k < 3).
// The probability of an integer (or of a noisy value) x is
// c(x + 1/2) - c(x - 1/2).

#ifndef NERFCODEC_ENTROPY_H_
#define NERFCODEC_ENTROPY_H_

#include <cstdint>
#include <span>
#include <vector>

#include "nerfcodec/ops.h"
#include "nerfcodec/tape.h"

namespace nerfcodec {

// Flat parameter layout of one stream's density:
//   H1[3x1] b1[3] a1[3] H2[3x3] b2[3] a2[3] H3[1x3] b3[1]
inline constexpr int kDensityParams = 28;

// Symmetric initial density: p(x) = p(-x).
template <typename T>
Tensor<T> InitDensity();

// CDF logits f3(f2(f1(x))) for every element of `x` (any shape); the result
// has the shape of `x`.
template <typename T>
Var<T> DensityLogits(Var<T> params, Var<T> x);

// c(x + 1/2) - c(x - 1/2), evaluated on the side of the sigmoid with the
// smaller magnitude for accuracy.
template <typename T>
Var<T> DensityLikelihood(Var<T> params, Var<T> x);

// Sum of -log2(p(x) + 1e-9) over the elements of `x`.
template <typename T>
Var<T> StreamBits(Var<T> params, Var<T> x);

// Value-level evaluation in double.
double DensityLogitValue(std::span<const float> params, double x);
double DensityProb(std::span<const float> params, double x);

// x + u with u ~ U(-1/2, 1/2) drawn from the counter-based stream `key`.
template <typename T>
Var<T> AddUniformNoise(Var<T> x, uint64_t key);

struct IntBounds {
  int32_t min = 0;
  int32_t max = 0;
  bool operator==(const IntBounds&) const = default;
};

// Round half to even.
std::vector<int32_t> QuantizeRound(std::span<const float> values,
                                   IntBounds* bounds);

inline constexpr int kFreqBits = 16;
inline constexpr uint32_t kFreqTotal = 1u << kFreqBits;

// Frequencies for the symbols min..max: p(x) from the density, scaled to
// kFreqTotal with round-to-nearest, each at least 1, the remainder assigned
// to the most probable symbol. Throws ContractError for more than kFreqTotal
// symbols.
std::vector<uint32_t> FrequencyTable(std::span<const float> params,
                                     IntBounds bounds);

// Range coder over a fixed frequency table (sum kFreqTotal).
std::vector<uint8_t> EncodeStream(std::span<const int32_t> symbols,
                                  std::span<const float> params,
                                  IntBounds bounds);
// Throws FormatError when the bytes are truncated or inconsistent.
std::vector<int32_t> DecodeStream(std::span<const uint8_t> bytes,
                                  std::span<const float> params,
                                  IntBounds bounds, int64_t n);

// Table-driven variants used by the two functions above.
std::vector<uint8_t> RangeEncode(std::span<const int32_t> symbols,
                                 std::span<const uint32_t> freqs,
                                 int32_t min_symbol);
std::vector<int32_t> RangeDecode(std::span<const uint8_t> bytes,
                                 std::span<const uint32_t> freqs,
                                 int32_t min_symbol, int64_t n);

// Ideal code length in bits of `symbols` under `freqs`.
double IdealBits(std::span<const int32_t> symbols,
                 std::span<const uint32_t> freqs, int32_t min_symbol);

}  // namespace nerfcodec

#endif  // NERFCODEC_ENTROPY_H_
