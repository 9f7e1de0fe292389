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

#include "nerfcodec/encoder.h"

#include <algorithm>
#include <numeric>
#include <string>

namespace nerfcodec {
namespace {

template <typename T>
Var<T> Squeeze0(Var<T> x) {
  Shape s(x.shape().begin() + 1, x.shape().end());
  return Reshape(x, s);
}

template <typename T>
Var<T> Unsqueeze0(Var<T> x) {
  Shape s = x.shape();
  s.insert(s.begin(), 1);
  return Reshape(x, s);
}

// Mean of `plane` over `axis`, reshaped so it broadcasts over `target`.
template <typename T>
Var<T> PooledPartner(Var<T> plane, int axis, bool keep_rows,
                     const Shape& target) {
  Var<T> pooled = MeanPoolAxis(plane, axis);  // [C, n]
  const int64_t c = pooled.shape()[0], n = pooled.shape()[1];
  pooled = Reshape(pooled, keep_rows ? Shape{c, n, 1} : Shape{c, 1, n});
  return Broadcast(pooled, target);
}

template <typename T>
bool VolumeLess(const UnprojectedVolume<T>* a, const UnprojectedVolume<T>* b) {
  const auto& fa = a->features.value().data;
  const auto& fb = b->features.value().data;
  if (fa != fb) {
    return std::lexicographical_compare(fa.begin(), fa.end(), fb.begin(),
                                        fb.end());
  }
  return std::lexicographical_compare(a->mask.data.begin(), a->mask.data.end(),
                                      b->mask.data.begin(), b->mask.data.end());
}

}  // namespace

template <typename T>
BasicEncoderWeights<T> BasicEncoderWeights<T>::Init(const EncoderConfig& config,
                                                    uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto& p = config.pyramid;
  const int c = config.channels;
  BasicEncoderWeights w;
  w.config = config;
  w.stem = InitConv<T>(p[0], 3, 3, 2, rng);
  w.down1 = InitConv<T>(p[1], p[0], 3, 2, rng);
  w.down2 = InitConv<T>(p[2], p[1], 3, 2, rng);
  for (int i = 0; i < 3; ++i) w.lateral[i] = InitConv<T>(c, p[i], 1, 2, rng, 1.0);
  w.head = InitConv<T>(c, c, 3, 2, rng, 1.0);
  w.agg1 = InitConv<T>(c, c, 3, 3, rng);
  w.agg2 = InitConv<T>(c, c, 3, 3, rng);
  // The residual branch starts small so the initial volume is the mean.
  for (auto& v : w.agg2.weight.data) v *= T(0.1);
  return w;
}

template <typename T>
std::vector<NamedTensor<T>> BasicEncoderWeights<T>::Params() {
  std::vector<NamedTensor<T>> out;
  AppendConv("encoder.stem", stem, &out);
  AppendConv("encoder.down1", down1, &out);
  AppendConv("encoder.down2", down2, &out);
  for (int i = 0; i < 3; ++i) {
    AppendConv("encoder.lateral" + std::to_string(i), lateral[i], &out);
  }
  AppendConv("encoder.head", head, &out);
  AppendConv("encoder.agg1", agg1, &out);
  AppendConv("encoder.agg2", agg2, &out);
  return out;
}

template <typename T>
EncoderVars<T> BindEncoder(Tape<T>& tape, const BasicEncoderWeights<T>& w,
                           bool requires_grad) {
  EncoderVars<T> v;
  v.config = w.config;
  v.stem = BindConv(tape, w.stem, requires_grad);
  v.down1 = BindConv(tape, w.down1, requires_grad);
  v.down2 = BindConv(tape, w.down2, requires_grad);
  for (int i = 0; i < 3; ++i) {
    v.lateral[i] = BindConv(tape, w.lateral[i], requires_grad);
  }
  v.head = BindConv(tape, w.head, requires_grad);
  v.agg1 = BindConv(tape, w.agg1, requires_grad);
  v.agg2 = BindConv(tape, w.agg2, requires_grad);
  return v;
}

template <typename T>
Tensor<T> ImageTensor(const Image& image) {
  const int h = image.height, w = image.width;
  Tensor<T> t({1, 3, h, w});
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        t[(c * h + y) * w + x] = static_cast<T>(image.at(y, x, c));
      }
    }
  }
  return t;
}

template <typename T>
Var<T> ExtractFeatureMap(const EncoderVars<T>& enc, const Image& image) {
  if (image.empty() || image.height % 4 != 0 || image.width % 4 != 0) {
    throw ContractError("encoder images must be non-empty with sides "
                        "divisible by 4");
  }
  Tape<T>& tape = *enc.stem.weight.tape;
  Var<T> x = tape.Constant(ImageTensor<T>(image));
  Var<T> c0 = Relu(ApplyConv2d(enc.stem, x));
  Var<T> c1 = Relu(ApplyConv2d(enc.down1, c0, 2));
  Var<T> c2 = Relu(ApplyConv2d(enc.down2, c1, 2));
  Var<T> t2 = ApplyConv2d(enc.lateral[2], c2);
  Var<T> t1 = Add(ApplyConv2d(enc.lateral[1], c1), Upsample2d(t2));
  Var<T> t0 = Add(ApplyConv2d(enc.lateral[0], c0), Upsample2d(t1));
  return Squeeze0(ApplyConv2d(enc.head, Relu(t0)));
}

template <typename T>
std::vector<Var<T>> ExtractFeatures(
    const EncoderVars<T>& enc, const std::vector<const CameraView*>& views) {
  if (views.empty()) throw ContractError("ExtractFeatures: no views");
  std::vector<Var<T>> maps;
  for (const CameraView* v : views) {
    if (v->image.height != views[0]->image.height ||
        v->image.width != views[0]->image.width) {
      throw ContractError("ExtractFeatures: inconsistent image sizes");
    }
    maps.push_back(ExtractFeatureMap(enc, v->image));
  }
  return maps;
}

template <typename T>
std::vector<T> GridCoordinates(int resolution) {
  const int64_t v = resolution;
  std::vector<T> coords(3 * v * v * v);
  const double step = 2.0 / v;
  for (int64_t z = 0; z < v; ++z) {
    for (int64_t y = 0; y < v; ++y) {
      for (int64_t x = 0; x < v; ++x) {
        T* p = coords.data() + 3 * ((z * v + y) * v + x);
        p[0] = static_cast<T>(-1.0 + (x + 0.5) * step);
        p[1] = static_cast<T>(-1.0 + (y + 0.5) * step);
        p[2] = static_cast<T>(-1.0 + (z + 0.5) * step);
      }
    }
  }
  return coords;
}

template <typename T>
UnprojectedVolume<T> Unproject(Var<T> feature_map, const CameraView& view,
                               int resolution) {
  const int64_t c = feature_map.shape()[0];
  const int64_t v = resolution;
  const int64_t n = v * v * v;
  const std::vector<T> grid = GridCoordinates<T>(resolution);
  std::vector<T> uv(2 * n);
  Tensor<T> mask({v, v, v});
  for (int64_t i = 0; i < n; ++i) {
    const Eigen::Vector3d p(grid[3 * i], grid[3 * i + 1], grid[3 * i + 2]);
    const Projection proj = Project(p, view);
    uv[2 * i] = static_cast<T>(proj.u - 0.5);
    uv[2 * i + 1] = static_cast<T>(proj.v - 0.5);
    mask[i] = proj.in_frustum ? T(1) : T(0);
  }
  Var<T> sampled = BilinearGather(feature_map, std::span<const T>(uv),
                                  OutOfBounds::kClamp,
                                  GatherLayout::kChannelMajor);  // [C, N]
  Tape<T>& tape = *feature_map.tape;
  Var<T> m = tape.Constant(Tensor<T>({1, n}, mask.data));
  Var<T> masked = Mul(sampled, Broadcast(m, {c, n}));
  return {Reshape(masked, {c, v, v, v}), std::move(mask)};
}

template <typename T>
Var<T> MaskedMean(const std::vector<UnprojectedVolume<T>>& volumes) {
  if (volumes.empty()) throw ContractError("MaskedMean: no volumes");
  const Shape shape = volumes[0].features.shape();
  for (const auto& vol : volumes) {
    if (vol.features.shape() != shape || vol.mask.size() != shape[1] * shape[2] * shape[3]) {
      throw ContractError("MaskedMean: volume shapes differ");
    }
  }
  std::vector<const UnprojectedVolume<T>*> order;
  for (const auto& vol : volumes) order.push_back(&vol);
  std::stable_sort(order.begin(), order.end(), VolumeLess<T>);

  const int64_t n = volumes[0].mask.size();
  std::vector<T> count(n, T(0));
  for (const auto* vol : order) {
    for (int64_t i = 0; i < n; ++i) count[i] += vol->mask[i];
  }
  Tape<T>& tape = *volumes[0].features.tape;
  Shape wshape = shape;
  wshape[0] = 1;
  Var<T> sum;
  for (const auto* vol : order) {
    Tensor<T> w(wshape);
    for (int64_t i = 0; i < n; ++i) {
      w[i] = count[i] > 0 ? vol->mask[i] / count[i] : T(0);
    }
    Var<T> term = Mul(vol->features, Broadcast(tape.Constant(std::move(w)), shape));
    sum = sum.valid() ? Add(sum, term) : term;
  }
  return sum;
}

template <typename T>
Var<T> Aggregate(const EncoderVars<T>& enc,
                 const std::vector<UnprojectedVolume<T>>& volumes) {
  Var<T> mean = MaskedMean(volumes);
  Var<T> h = Relu(ApplyConv3d(enc.agg1, mean));
  return Add(mean, ApplyConv3d(enc.agg2, h));
}

template <typename T>
std::array<Var<T>, 3> AxisPool(Var<T> volume) {
  if (volume.shape().size() != 4) {
    throw ContractError("AxisPool: expected [C, Z, Y, X], got " +
                        ShapeString(volume.shape()));
  }
  return {MeanPoolAxis(volume, 1), MeanPoolAxis(volume, 3),
          MeanPoolAxis(volume, 2)};
}

template <typename T>
std::array<Var<T>, 3> EncodeViews(const EncoderVars<T>& enc,
                                  const std::vector<const CameraView*>& views) {
  const std::vector<Var<T>> maps = ExtractFeatures(enc, views);
  std::vector<UnprojectedVolume<T>> volumes;
  for (size_t i = 0; i < views.size(); ++i) {
    volumes.push_back(Unproject(maps[i], *views[i], enc.config.volume_res));
  }
  return AxisPool(Aggregate(enc, volumes));
}

template <typename T>
BasicGeneratorWeights<T> BasicGeneratorWeights<T>::Init(
    const TriplaneConfig& config, uint64_t seed) {
  for (int s = 1; s < kNumScales; ++s) {
    if (config.resolutions[s] != 2 * config.resolutions[s - 1]) {
      throw ContractError("generator scales must double");
    }
  }
  std::mt19937_64 rng(seed);
  const int c = config.channels;
  BasicGeneratorWeights w;
  w.config = config;
  for (int s = 0; s < kNumScales; ++s) {
    for (int k = 0; k < kNumPlanes; ++k) {
      // Small initial planes keep the MLP inputs near the scratch scale.
      w.aware[s][k] = InitConv<T>(c, 3 * c, 3, 2, rng, 0.01);
    }
    w.refine_a[s] = InitConv<T>(c, c, 3, 2, rng);
    w.refine_b[s] = InitConv<T>(c, c, 3, 2, rng);
    for (auto& v : w.refine_b[s].weight.data) v *= T(0.1);
  }
  for (int s = 0; s + 1 < kNumScales; ++s) {
    w.up[s] = InitConv<T>(c, c, 3, 2, rng, 1.0);
  }
  return w;
}

template <typename T>
std::vector<NamedTensor<T>> BasicGeneratorWeights<T>::Params() {
  std::vector<NamedTensor<T>> out;
  for (int s = 0; s < kNumScales; ++s) {
    const std::string p = "generator.s" + std::to_string(s);
    for (int k = 0; k < kNumPlanes; ++k) {
      AppendConv(p + ".aware" + std::to_string(k), aware[s][k], &out);
    }
    AppendConv(p + ".refine_a", refine_a[s], &out);
    AppendConv(p + ".refine_b", refine_b[s], &out);
    if (s + 1 < kNumScales) AppendConv(p + ".up", up[s], &out);
  }
  return out;
}

template <typename T>
GeneratorVars<T> BindGenerator(Tape<T>& tape,
                               const BasicGeneratorWeights<T>& w,
                               bool requires_grad) {
  GeneratorVars<T> v;
  v.config = w.config;
  for (int s = 0; s < kNumScales; ++s) {
    for (int k = 0; k < kNumPlanes; ++k) {
      v.aware[s][k] = BindConv(tape, w.aware[s][k], requires_grad);
    }
    v.refine_a[s] = BindConv(tape, w.refine_a[s], requires_grad);
    v.refine_b[s] = BindConv(tape, w.refine_b[s], requires_grad);
  }
  for (int s = 0; s + 1 < kNumScales; ++s) {
    v.up[s] = BindConv(tape, w.up[s], requires_grad);
  }
  return v;
}

template <typename T>
std::array<Var<T>, 3> CrossPlaneInputs(const std::array<Var<T>, 3>& planes) {
  const Var<T>& xy = planes[kXY];  // [C, y, x]
  const Var<T>& yz = planes[kYZ];  // [C, z, y]
  const Var<T>& xz = planes[kXZ];  // [C, z, x]
  const Shape s = xy.shape();
  if (yz.shape() != s || xz.shape() != s || s.size() != 3 || s[1] != s[2]) {
    throw ContractError("CrossPlaneInputs: planes must share a [C, V, V] shape");
  }
  return {
      Concat<T>({xy, PooledPartner(yz, 1, true, s),
                 PooledPartner(xz, 1, false, s)}, 0),
      Concat<T>({yz, PooledPartner(xy, 2, false, s),
                 PooledPartner(xz, 2, true, s)}, 0),
      Concat<T>({xz, PooledPartner(xy, 1, false, s),
                 PooledPartner(yz, 2, true, s)}, 0),
  };
}

template <typename T>
PlaneVars<T> GenerateTriplanes(const GeneratorVars<T>& gen,
                               const std::array<Var<T>, 3>& planes) {
  const TriplaneConfig& cfg = gen.config;
  for (const auto& p : planes) {
    if (p.shape() != cfg.PlaneShape(0)) {
      throw ContractError("GenerateTriplanes: expected planes of shape " +
                          ShapeString(cfg.PlaneShape(0)) + ", got " +
                          ShapeString(p.shape()));
    }
  }
  PlaneVars<T> out;
  std::array<Var<T>, 3> x = planes;
  for (int s = 0; s < kNumScales; ++s) {
    const std::array<Var<T>, 3> in = CrossPlaneInputs(x);
    std::vector<Var<T>> mixed;
    for (int k = 0; k < kNumPlanes; ++k) {
      mixed.push_back(ApplyConv2d(gen.aware[s][k], Unsqueeze0(in[k])));
    }
    Var<T> batch = Concat(mixed, 0);  // [3, C, V, V]
    Var<T> h = Relu(ApplyConv2d(gen.refine_a[s], batch));
    batch = Add(batch, ApplyConv2d(gen.refine_b[s], h));
    for (int k = 0; k < kNumPlanes; ++k) {
      out[PlaneIndex(k, s)] = Squeeze0(Slice(batch, 0, k, 1));
    }
    if (s + 1 < kNumScales) {
      Var<T> next = ApplyConv2d(gen.up[s], Upsample2d(batch));
      for (int k = 0; k < kNumPlanes; ++k) {
        x[k] = Squeeze0(Slice(next, 0, k, 1));
      }
    }
  }
  return out;
}

#define NERFCODEC_INSTANTIATE_ENCODER(T)                                     \
  template struct BasicEncoderWeights<T>;                                    \
  template struct BasicGeneratorWeights<T>;                                  \
  template EncoderVars<T> BindEncoder<T>(Tape<T>&,                           \
                                         const BasicEncoderWeights<T>&, bool); \
  template Tensor<T> ImageTensor<T>(const Image&);                           \
  template Var<T> ExtractFeatureMap<T>(const EncoderVars<T>&, const Image&); \
  template std::vector<Var<T>> ExtractFeatures<T>(                           \
      const EncoderVars<T>&, const std::vector<const CameraView*>&);         \
  template std::vector<T> GridCoordinates<T>(int);                           \
  template UnprojectedVolume<T> Unproject<T>(Var<T>, const CameraView&, int); \
  template Var<T> MaskedMean<T>(const std::vector<UnprojectedVolume<T>>&);   \
  template Var<T> Aggregate<T>(const EncoderVars<T>&,                        \
                               const std::vector<UnprojectedVolume<T>>&);    \
  template std::array<Var<T>, 3> AxisPool<T>(Var<T>);                        \
  template std::array<Var<T>, 3> EncodeViews<T>(                             \
      const EncoderVars<T>&, const std::vector<const CameraView*>&);         \
  template GeneratorVars<T> BindGenerator<T>(                                \
      Tape<T>&, const BasicGeneratorWeights<T>&, bool);                      \
  template std::array<Var<T>, 3> CrossPlaneInputs<T>(                        \
      const std::array<Var<T>, 3>&);                                         \
  template PlaneVars<T> GenerateTriplanes<T>(const GeneratorVars<T>&,        \
                                             const std::array<Var<T>, 3>&);

NERFCODEC_INSTANTIATE_ENCODER(float)
NERFCODEC_INSTANTIATE_ENCODER(double)

#undef NERFCODEC_INSTANTIATE_ENCODER

}  // namespace nerfcodec
