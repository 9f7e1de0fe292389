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

#include "nerfcodec/vq.h"

#include <limits>
#include <string>

namespace nerfcodec {
namespace {

constexpr size_t kMaxCandidates = 4096;

template <typename T>
Var<T> Squeeze0(Var<T> x) {
  return Reshape(x, Shape(x.shape().begin() + 1, x.shape().end()));
}

}  // namespace

template <typename T>
BasicVqWeights<T> BasicVqWeights<T>::Init(const VqConfig& config,
                                          uint64_t seed) {
  if (config.codebook_size < 2) throw ContractError("codebook needs K >= 2");
  if (config.resolution % 4 != 0) {
    throw ContractError("VQ resolution must be divisible by 4");
  }
  std::mt19937_64 rng(seed);
  const int c = config.channels, d = config.code_dim;
  BasicVqWeights w;
  w.config = config;
  w.down1 = InitConv<T>(d, c, 3, 2, rng);
  w.down2 = InitConv<T>(d, d, 3, 2, rng, 1.0);
  w.up1 = InitConv<T>(c, d, 3, 2, rng);
  w.up2 = InitConv<T>(c, c, 3, 2, rng, 1.0);
  w.codebook = Tensor<T>({config.codebook_size, d});
  std::normal_distribution<double> dist(0.0, 0.5);
  for (auto& v : w.codebook.data) v = static_cast<T>(dist(rng));
  return w;
}

template <typename T>
std::vector<NamedTensor<T>> BasicVqWeights<T>::Params() {
  std::vector<NamedTensor<T>> out;
  AppendConv("vq.down1", down1, &out);
  AppendConv("vq.down2", down2, &out);
  out.push_back({"vq.codebook", &codebook});
  AppendConv("vq.up1", up1, &out);
  AppendConv("vq.up2", up2, &out);
  return out;
}

template <typename T>
VqVars<T> BindVq(Tape<T>& tape, const BasicVqWeights<T>& w, bool train_convs,
                 bool train_codebook) {
  VqVars<T> v;
  v.config = w.config;
  v.down1 = BindConv(tape, w.down1, train_convs);
  v.down2 = BindConv(tape, w.down2, train_convs);
  v.up1 = BindConv(tape, w.up1, train_convs);
  v.up2 = BindConv(tape, w.up2, train_convs);
  v.codebook = tape.Leaf(&w.codebook, train_codebook);
  return v;
}

template <typename T>
Var<T> Downsample(const VqVars<T>& vq, const std::array<Var<T>, 3>& planes) {
  const VqConfig& cfg = vq.config;
  const Shape expect = {cfg.channels, cfg.resolution, cfg.resolution};
  std::vector<Var<T>> batch;
  for (const auto& p : planes) {
    if (p.shape() != expect) {
      throw ContractError("Downsample: expected planes " + ShapeString(expect) +
                          ", got " + ShapeString(p.shape()));
    }
    batch.push_back(Reshape(p, {1, cfg.channels, cfg.resolution, cfg.resolution}));
  }
  Var<T> x = Concat(batch, 0);
  x = Relu(ApplyConv2d(vq.down1, x, 2));
  return ApplyConv2d(vq.down2, x, 2);
}

template <typename T>
std::vector<int32_t> NearestCodes(const Tensor<T>& codes,
                                  const Tensor<T>& codebook) {
  if (codebook.rank() != 2 || codebook.dim(0) == 0) {
    throw ContractError("NearestCodes: empty codebook");
  }
  const int64_t k = codebook.dim(0), d = codebook.dim(1);
  if (codes.rank() != 4 || codes.dim(1) != d) {
    throw ContractError("NearestCodes: code dim mismatch " +
                        ShapeString(codes.shape) + " vs codebook " +
                        ShapeString(codebook.shape));
  }
  const int64_t planes = codes.dim(0), hw = codes.dim(2) * codes.dim(3);
  std::vector<int32_t> out(planes * hw);
  std::vector<double> q(d);
  for (int64_t p = 0; p < planes; ++p) {
    for (int64_t i = 0; i < hw; ++i) {
      for (int64_t c = 0; c < d; ++c) q[c] = codes[(p * d + c) * hw + i];
      double best = std::numeric_limits<double>::infinity();
      int32_t arg = 0;
      for (int64_t r = 0; r < k; ++r) {
        const T* e = codebook.data.data() + r * d;
        double dist = 0;
        for (int64_t c = 0; c < d; ++c) {
          const double diff = q[c] - static_cast<double>(e[c]);
          dist += diff * diff;
        }
        if (dist < best) {
          best = dist;
          arg = static_cast<int32_t>(r);
        }
      }
      out[p * hw + i] = arg;
    }
  }
  return out;
}

template <typename T>
Var<T> GatherCodes(Var<T> codebook, std::span<const int32_t> indices,
                   const Shape& code_shape) {
  const int64_t k = codebook.shape()[0], d = codebook.shape()[1];
  if (code_shape.size() != 4 || code_shape[1] != d) {
    throw ContractError("GatherCodes: bad code shape " + ShapeString(code_shape));
  }
  const int64_t planes = code_shape[0], hw = code_shape[2] * code_shape[3];
  if (static_cast<int64_t>(indices.size()) != planes * hw) {
    throw ContractError("GatherCodes: index count mismatch");
  }
  Tape<T>& tape = *codebook.tape;
  std::vector<Var<T>> parts;
  for (int64_t p = 0; p < planes; ++p) {
    Tensor<T> onehot({hw, k});
    for (int64_t i = 0; i < hw; ++i) {
      const int32_t idx = indices[p * hw + i];
      if (idx < 0 || idx >= k) throw ContractError("GatherCodes: index out of range");
      onehot[i * k + idx] = T(1);
    }
    // E^T onehot^T: [d, hw]
    Var<T> rows = MatMul(codebook, tape.Constant(std::move(onehot)), true, true);
    parts.push_back(Reshape(rows, {1, d, code_shape[2], code_shape[3]}));
  }
  return Concat(parts, 0);
}

template <typename T>
Quantized<T> Quantize(Var<T> codes, Var<T> codebook) {
  Quantized<T> q;
  q.indices = NearestCodes(codes.value(), codebook.value());
  q.codes = GatherCodes(codebook, q.indices, codes.shape());
  return q;
}

template <typename T>
Var<T> VqLoss(Var<T> codes, Var<T> quantized, T commit) {
  if (codes.shape() != quantized.shape()) {
    throw ContractError("VqLoss: shape mismatch");
  }
  Tape<T>& tape = *codes.tape;
  const T inv_n = T(1) / static_cast<T>(codes.value().size());
  Var<T> codebook_term =
      SumReduce(Square(Sub(tape.Constant(codes.value()), quantized)));
  Var<T> commit_term =
      SumReduce(Square(Sub(tape.Constant(quantized.value()), codes)));
  return MulScalar(Add(codebook_term, MulScalar(commit_term, commit)), inv_n);
}

template <typename T>
std::array<Var<T>, 3> Upsample(const VqVars<T>& vq, Var<T> codes) {
  const VqConfig& cfg = vq.config;
  if (codes.shape() != cfg.CodeShape()) {
    throw ContractError("Upsample: expected codes " +
                        ShapeString(cfg.CodeShape()) + ", got " +
                        ShapeString(codes.shape()));
  }
  Var<T> x = Relu(ApplyConv2d(vq.up1, Upsample2d(codes)));
  x = ApplyConv2d(vq.up2, Upsample2d(x));
  std::array<Var<T>, 3> out;
  for (int k = 0; k < 3; ++k) out[k] = Squeeze0(Slice(x, 0, k, 1));
  return out;
}

DeadCodeMonitor::DeadCodeMonitor(int codebook_size, int code_dim)
    : code_dim_(code_dim), used_(codebook_size, 0) {}

void DeadCodeMonitor::Observe(std::span<const int32_t> indices,
                              const Tensor<float>& codes,
                              std::mt19937_64& rng) {
  for (int32_t i : indices) used_.at(i) = 1;
  const int64_t hw = codes.dim(2) * codes.dim(3);
  for (int64_t p = 0; p < codes.dim(0); ++p) {
    for (int64_t i = 0; i < hw; ++i) {
      std::vector<float> v(code_dim_);
      for (int c = 0; c < code_dim_; ++c) v[c] = codes[(p * code_dim_ + c) * hw + i];
      if (candidates_.size() < kMaxCandidates) {
        candidates_.push_back(std::move(v));
      } else {
        candidates_[rng() % kMaxCandidates] = std::move(v);
      }
    }
  }
}

int DeadCodeMonitor::EndEpoch(Tensor<float>* codebook, std::mt19937_64& rng) {
  int reseeded = 0;
  if (!candidates_.empty()) {
    for (size_t r = 0; r < used_.size(); ++r) {
      if (used_[r]) continue;
      const auto& v = candidates_[rng() % candidates_.size()];
      std::copy(v.begin(), v.end(), codebook->data.begin() + r * code_dim_);
      ++reseeded;
    }
  }
  std::fill(used_.begin(), used_.end(), 0);
  candidates_.clear();
  return reseeded;
}

int DeadCodeMonitor::ReseedAll(Tensor<float>* codebook, std::mt19937_64& rng) {
  std::fill(used_.begin(), used_.end(), 0);
  return EndEpoch(codebook, rng);
}

#define NERFCODEC_INSTANTIATE_VQ(T)                                          \
  template struct BasicVqWeights<T>;                                         \
  template VqVars<T> BindVq<T>(Tape<T>&, const BasicVqWeights<T>&, bool, bool); \
  template Var<T> Downsample<T>(const VqVars<T>&, const std::array<Var<T>, 3>&); \
  template std::vector<int32_t> NearestCodes<T>(const Tensor<T>&,           \
                                                const Tensor<T>&);           \
  template Var<T> GatherCodes<T>(Var<T>, std::span<const int32_t>,           \
                                 const Shape&);                              \
  template Quantized<T> Quantize<T>(Var<T>, Var<T>);                         \
  template Var<T> VqLoss<T>(Var<T>, Var<T>, T);                              \
  template std::array<Var<T>, 3> Upsample<T>(const VqVars<T>&, Var<T>);

NERFCODEC_INSTANTIATE_VQ(float)
NERFCODEC_INSTANTIATE_VQ(double)

#undef NERFCODEC_INSTANTIATE_VQ

}  // namespace nerfcodec
