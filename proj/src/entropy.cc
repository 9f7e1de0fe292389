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

#include "nerfcodec/entropy.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "nerfcodec/random.h"

namespace nerfcodec {
namespace {

constexpr uint32_t kTop = 1u << 24;

template <typename T>
Var<T> Tanh(Var<T> x) {
  return AddScalar(MulScalar(Sigmoid(MulScalar(x, T(2))), T(2)), T(-1));
}

template <typename T>
Var<T> Param(Var<T> params, int64_t start, int64_t rows, int64_t cols) {
  return Reshape(Slice(params, 0, start, rows * cols), {rows, cols});
}

// g(y) = y + tanh(a) * tanh(y) for y [3, N] and a [3, 1].
template <typename T>
Var<T> Gate(Var<T> y, Var<T> a) {
  return Add(y, Mul(Broadcast(Tanh(a), y.shape()), Tanh(y)));
}

double SoftplusD(double x) { return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0); }
double SigmoidD(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void CheckParams(std::span<const float> params) {
  if (params.size() != kDensityParams) {
    throw ContractError("density model needs " + std::to_string(kDensityParams) +
                        " parameters, got " + std::to_string(params.size()));
  }
}

void CheckFreqs(std::span<const uint32_t> freqs) {
  uint64_t sum = 0;
  for (uint32_t f : freqs) {
    if (f == 0) throw ContractError("range coder: zero frequency");
    sum += f;
  }
  if (sum != kFreqTotal) throw ContractError("range coder: table does not sum to 2^16");
}

class RangeEncoder {
 public:
  void Encode(uint32_t cum, uint32_t freq) {
    const uint64_t lo = (static_cast<uint64_t>(range_) * cum) >> kFreqBits;
    const uint64_t hi = (static_cast<uint64_t>(range_) * (cum + freq)) >> kFreqBits;
    low_ += lo;
    range_ = static_cast<uint32_t>(hi - lo);
    while (range_ < kTop) {
      range_ <<= 8;
      ShiftLow();
    }
  }

  std::vector<uint8_t> Finish() {
    for (int i = 0; i < 5; ++i) ShiftLow();
    return std::move(out_);
  }

 private:
  void ShiftLow() {
    if (static_cast<uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
      const uint8_t carry = static_cast<uint8_t>(low_ >> 32);
      uint8_t temp = cache_;
      do {
        out_.push_back(static_cast<uint8_t>(temp + carry));
        temp = 0xFF;
      } while (--cache_size_ != 0);
      cache_ = static_cast<uint8_t>(low_ >> 24);
    }
    ++cache_size_;
    low_ = (low_ & 0x00FFFFFFu) << 8;
  }

  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint8_t cache_ = 0;
  uint64_t cache_size_ = 1;
  std::vector<uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const uint8_t> bytes) : bytes_(bytes) {
    for (int i = 0; i < 5; ++i) code_ = (code_ << 8) | Next();
  }

  // Returns the symbol position given cumulative frequencies (size n + 1).
  size_t Decode(std::span<const uint32_t> cum) {
    // Largest s with floor(range * cum[s] / 2^16) <= code.
    size_t lo = 0, hi = cum.size() - 1;
    while (hi - lo > 1) {
      const size_t mid = (lo + hi) / 2;
      if (Bound(cum[mid]) <= code_) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const uint64_t b0 = Bound(cum[lo]), b1 = Bound(cum[lo + 1]);
    if (code_ < b0 || code_ >= b1) throw FormatError("range decoder: corrupt stream");
    code_ -= static_cast<uint32_t>(b0);
    range_ = static_cast<uint32_t>(b1 - b0);
    while (range_ < kTop) {
      range_ <<= 8;
      code_ = (code_ << 8) | Next();
    }
    return lo;
  }

 private:
  uint64_t Bound(uint32_t c) const {
    return (static_cast<uint64_t>(range_) * c) >> kFreqBits;
  }
  uint32_t Next() {
    if (pos_ >= bytes_.size()) throw FormatError("range decoder: truncated stream");
    return bytes_[pos_++];
  }

  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
  uint32_t code_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
};

}  // namespace

template <typename T>
Tensor<T> InitDensity() {
  // Spread over roughly +-10 at init; biases are antisymmetric across units
  // so the density is symmetric while the units differ.
  const double scale = std::cbrt(10.0);
  const T h1 = static_cast<T>(std::log(std::expm1(1.0 / scale / 3.0)));
  const T h2 = static_cast<T>(std::log(std::expm1(1.0 / scale / 3.0)));
  const T h3 = static_cast<T>(std::log(std::expm1(1.0 / scale)));
  Tensor<T> p({kDensityParams});
  for (int i = 0; i < 3; ++i) p[i] = h1;
  const T b[3] = {T(-0.5), T(0), T(0.5)};
  for (int i = 0; i < 3; ++i) p[3 + i] = b[i];
  for (int i = 0; i < 9; ++i) p[9 + i] = h2;
  for (int i = 0; i < 3; ++i) p[18 + i] = b[i];
  for (int i = 0; i < 3; ++i) p[24 + i] = h3;
  return p;
}

template <typename T>
Var<T> DensityLogits(Var<T> params, Var<T> x) {
  if (params.shape() != Shape{kDensityParams}) {
    throw ContractError("density parameters must have shape [28]");
  }
  const int64_t n = x.value().size();
  Var<T> y = Reshape(x, {1, n});
  y = MatMul(Softplus(Param(params, 0, 3, 1)), y);
  y = Add(y, Broadcast(Param(params, 3, 3, 1), {3, n}));
  y = Gate(y, Param(params, 6, 3, 1));
  y = MatMul(Softplus(Param(params, 9, 3, 3)), y);
  y = Add(y, Broadcast(Param(params, 18, 3, 1), {3, n}));
  y = Gate(y, Param(params, 21, 3, 1));
  y = MatMul(Softplus(Param(params, 24, 1, 3)), y);
  y = Add(y, Broadcast(Param(params, 27, 1, 1), {1, n}));
  return Reshape(y, x.shape());
}

template <typename T>
Var<T> DensityLikelihood(Var<T> params, Var<T> x) {
  const int64_t n = x.value().size();
  Var<T> flat = Reshape(x, {n});
  Var<T> both = DensityLogits(
      params, Concat<T>({AddScalar(flat, T(0.5)), AddScalar(flat, T(-0.5))}, 0));
  Var<T> upper = Slice(both, 0, 0, n);
  Var<T> lower = Slice(both, 0, n, n);
  Tensor<T> sign({n});
  for (int64_t i = 0; i < n; ++i) {
    sign[i] = upper.value()[i] + lower.value()[i] > 0 ? T(-1) : T(1);
  }
  Var<T> s = x.tape->Constant(std::move(sign));
  Var<T> p = Mul(s, Sub(Sigmoid(Mul(s, upper)), Sigmoid(Mul(s, lower))));
  return Reshape(p, x.shape());
}

template <typename T>
Var<T> StreamBits(Var<T> params, Var<T> x) {
  Var<T> p = DensityLikelihood(params, x);
  return MulScalar(SumReduce(Log(AddScalar(p, T(1e-9)))),
                   static_cast<T>(-1.0 / std::log(2.0)));
}

double DensityLogitValue(std::span<const float> params, double x) {
  CheckParams(params);
  const float* p = params.data();
  double y1[3], y2[3];
  for (int i = 0; i < 3; ++i) {
    const double y = SoftplusD(p[i]) * x + p[3 + i];
    y1[i] = y + std::tanh(p[6 + i]) * std::tanh(y);
  }
  for (int i = 0; i < 3; ++i) {
    double y = p[18 + i];
    for (int j = 0; j < 3; ++j) y += SoftplusD(p[9 + i * 3 + j]) * y1[j];
    y2[i] = y + std::tanh(p[21 + i]) * std::tanh(y);
  }
  double out = p[27];
  for (int j = 0; j < 3; ++j) out += SoftplusD(p[24 + j]) * y2[j];
  return out;
}

double DensityProb(std::span<const float> params, double x) {
  const double u = DensityLogitValue(params, x + 0.5);
  const double l = DensityLogitValue(params, x - 0.5);
  const double s = u + l > 0 ? -1.0 : 1.0;
  return std::abs(SigmoidD(s * u) - SigmoidD(s * l));
}

template <typename T>
Var<T> AddUniformNoise(Var<T> x, uint64_t key) {
  Tensor<T> u(x.shape());
  for (int64_t i = 0; i < u.size(); ++i) {
    u[i] = static_cast<T>(UniformAt(key, static_cast<uint64_t>(i)) - 0.5);
  }
  return Add(x, x.tape->Constant(std::move(u)));
}

std::vector<int32_t> QuantizeRound(std::span<const float> values,
                                   IntBounds* bounds) {
  std::vector<int32_t> out(values.size());
  IntBounds b{0, 0};
  for (size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || std::abs(values[i]) > 1e9f) {
      throw ContractError("QuantizeRound: value out of range");
    }
    out[i] = static_cast<int32_t>(std::nearbyint(values[i]));
    if (i == 0) {
      b = {out[i], out[i]};
    } else {
      b.min = std::min(b.min, out[i]);
      b.max = std::max(b.max, out[i]);
    }
  }
  if (bounds != nullptr) *bounds = b;
  return out;
}

std::vector<uint32_t> FrequencyTable(std::span<const float> params,
                                     IntBounds bounds) {
  CheckParams(params);
  const int64_t n = static_cast<int64_t>(bounds.max) - bounds.min + 1;
  if (n <= 0 || n > static_cast<int64_t>(kFreqTotal)) {
    throw ContractError("FrequencyTable: support of " + std::to_string(n) +
                        " symbols is outside [1, 65536]");
  }
  std::vector<double> p(n);
  double total = 0;
  for (int64_t i = 0; i < n; ++i) {
    p[i] = DensityProb(params, static_cast<double>(bounds.min) + i);
    total += p[i];
  }
  if (!(total > 0) || !std::isfinite(total)) {
    std::fill(p.begin(), p.end(), 1.0);
    total = static_cast<double>(n);
  }
  std::vector<uint32_t> freq(n);
  int64_t sum = 0;
  for (int64_t i = 0; i < n; ++i) {
    const double f = std::round(p[i] / total * kFreqTotal);
    freq[i] = static_cast<uint32_t>(std::max(1.0, f));
    sum += freq[i];
  }
  int64_t diff = static_cast<int64_t>(kFreqTotal) - sum;
  while (diff != 0) {
    const size_t arg = std::max_element(freq.begin(), freq.end()) - freq.begin();
    if (diff > 0) {
      freq[arg] += static_cast<uint32_t>(diff);
      diff = 0;
    } else {
      const int64_t take = std::min<int64_t>(-diff, freq[arg] - 1);
      freq[arg] -= static_cast<uint32_t>(take);
      diff += take;
      if (take == 0) break;  // unreachable while n <= kFreqTotal
    }
  }
  return freq;
}

std::vector<uint8_t> RangeEncode(std::span<const int32_t> symbols,
                                 std::span<const uint32_t> freqs,
                                 int32_t min_symbol) {
  CheckFreqs(freqs);
  std::vector<uint32_t> cum(freqs.size() + 1, 0);
  for (size_t i = 0; i < freqs.size(); ++i) cum[i + 1] = cum[i] + freqs[i];
  RangeEncoder enc;
  for (int32_t s : symbols) {
    const int64_t i = static_cast<int64_t>(s) - min_symbol;
    if (i < 0 || i >= static_cast<int64_t>(freqs.size())) {
      throw ContractError("range coder: symbol " + std::to_string(s) +
                          " outside the bounds");
    }
    enc.Encode(cum[i], freqs[i]);
  }
  return enc.Finish();
}

std::vector<int32_t> RangeDecode(std::span<const uint8_t> bytes,
                                 std::span<const uint32_t> freqs,
                                 int32_t min_symbol, int64_t n) {
  CheckFreqs(freqs);
  std::vector<uint32_t> cum(freqs.size() + 1, 0);
  for (size_t i = 0; i < freqs.size(); ++i) cum[i + 1] = cum[i] + freqs[i];
  RangeDecoder dec(bytes);
  std::vector<int32_t> out(n);
  for (int64_t i = 0; i < n; ++i) {
    out[i] = min_symbol + static_cast<int32_t>(dec.Decode(cum));
  }
  return out;
}

std::vector<uint8_t> EncodeStream(std::span<const int32_t> symbols,
                                  std::span<const float> params,
                                  IntBounds bounds) {
  return RangeEncode(symbols, FrequencyTable(params, bounds), bounds.min);
}

std::vector<int32_t> DecodeStream(std::span<const uint8_t> bytes,
                                  std::span<const float> params,
                                  IntBounds bounds, int64_t n) {
  return RangeDecode(bytes, FrequencyTable(params, bounds), bounds.min, n);
}

double IdealBits(std::span<const int32_t> symbols,
                 std::span<const uint32_t> freqs, int32_t min_symbol) {
  double bits = 0;
  for (int32_t s : symbols) {
    const int64_t i = static_cast<int64_t>(s) - min_symbol;
    if (i < 0 || i >= static_cast<int64_t>(freqs.size())) {
      throw ContractError("IdealBits: symbol outside the table");
    }
    bits -= std::log2(static_cast<double>(freqs[i]) / kFreqTotal);
  }
  return bits;
}

#define NERFCODEC_INSTANTIATE_ENTROPY(T)                 \
  template Tensor<T> InitDensity<T>();                   \
  template Var<T> DensityLogits<T>(Var<T>, Var<T>);      \
  template Var<T> DensityLikelihood<T>(Var<T>, Var<T>);  \
  template Var<T> StreamBits<T>(Var<T>, Var<T>);         \
  template Var<T> AddUniformNoise<T>(Var<T>, uint64_t);

NERFCODEC_INSTANTIATE_ENTROPY(float)
NERFCODEC_INSTANTIATE_ENTROPY(double)

#undef NERFCODEC_INSTANTIATE_ENTROPY

}  // namespace nerfcodec
