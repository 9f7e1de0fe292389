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

#include "nerfcodec/triplane.h"

#include <algorithm>

#include "nerfcodec/bytes.h"

namespace nerfcodec {

int64_t TriplaneConfig::TexelsPerPlaneSet() const {
  int64_t n = 0;
  for (int v : resolutions) n += static_cast<int64_t>(v) * v;
  return n;
}

int64_t TriplaneConfig::TotalFeatures() const {
  return 3 * static_cast<int64_t>(channels) * TexelsPerPlaneSet();
}

MultiResTriplanes MultiResTriplanes::Zeros(const TriplaneConfig& config) {
  MultiResTriplanes tri;
  tri.config = config;
  for (int k = 0; k < kNumPlanes; ++k) {
    for (int s = 0; s < kNumScales; ++s) {
      tri.plane(k, s) = Tensor<float>(config.PlaneShape(s));
    }
  }
  return tri;
}

template <typename T>
void CheckPlanes(const PlaneSet<T>& planes, const TriplaneConfig& config) {
  for (int k = 0; k < kNumPlanes; ++k) {
    for (int s = 0; s < kNumScales; ++s) {
      if (planes[PlaneIndex(k, s)].shape != config.PlaneShape(s)) {
        throw ContractError("triplane (" + std::to_string(k) + ", " +
                            std::to_string(s) + ") has shape " +
                            ShapeString(planes[PlaneIndex(k, s)].shape) +
                            ", expected " + ShapeString(config.PlaneShape(s)));
      }
    }
  }
}

template <typename T>
PlaneVars<T> BindPlanes(Tape<T>& tape, const PlaneSet<T>& planes,
                        bool requires_grad) {
  PlaneVars<T> vars;
  for (size_t i = 0; i < planes.size(); ++i) {
    vars[i] = tape.Leaf(&planes[i], requires_grad);
  }
  return vars;
}

template <typename T>
std::vector<T> PlaneCoords(int k, int resolution, std::span<const T> points) {
  // (column, row) coordinate axes per plane.
  static constexpr int kAxes[kNumPlanes][2] = {{0, 1}, {1, 2}, {0, 2}};
  const size_t n = points.size() / 3;
  std::vector<T> coords(2 * n);
  const T half = T(0.5) * static_cast<T>(resolution);
  for (size_t i = 0; i < n; ++i) {
    for (int a = 0; a < 2; ++a) {
      const T x = std::clamp(points[3 * i + kAxes[k][a]], T(-1), T(1));
      coords[2 * i + a] = (x + T(1)) * half - T(0.5);
    }
  }
  return coords;
}

template <typename T>
Var<T> SampleFeatures(const PlaneVars<T>& planes, std::span<const T> points) {
  if (points.size() % 3 != 0) {
    throw ContractError("sample_features: points must be (x, y, z) triples");
  }
  Var<T> total;
  for (int k = 0; k < kNumPlanes; ++k) {
    std::vector<Var<T>> scales;
    for (int s = 0; s < kNumScales; ++s) {
      const Var<T>& plane = planes[PlaneIndex(k, s)];
      const std::vector<T> coords =
          PlaneCoords<T>(k, static_cast<int>(plane.shape()[2]), points);
      scales.push_back(
          BilinearGather<T>(plane, coords, OutOfBounds::kClamp));
    }
    Var<T> per_plane = Concat(scales, 1);
    total = total.valid() ? Add(total, per_plane) : per_plane;
  }
  return total;
}

template <typename T>
Var<T> PlaneTvSum(Var<T> plane) {
  const Shape& s = plane.shape();
  if (s.size() != 3) throw ContractError("tv: plane must be [C, H, W]");
  Tape<T>& tape = *plane.tape;
  Var<T> x = Reshape(plane, {s[0], 1, s[1], s[2]});
  Var<T> total;
  if (s[2] > 1) {
    Var<T> kx = tape.Constant(Tensor<T>({1, 1, 1, 2}, std::vector<T>{-1, 1}));
    total = SumReduce(Square(Conv2d(x, kx, Var<T>{}, 1, 0)));
  }
  if (s[1] > 1) {
    Var<T> ky = tape.Constant(Tensor<T>({1, 1, 2, 1}, std::vector<T>{-1, 1}));
    Var<T> dy = SumReduce(Square(Conv2d(x, ky, Var<T>{}, 1, 0)));
    total = total.valid() ? Add(total, dy) : dy;
  }
  return total.valid() ? total : tape.Constant(Tensor<T>::Scalar(T(0)));
}

template <typename T>
Var<T> TvLoss(const PlaneVars<T>& planes, const TriplaneConfig& config) {
  Var<T> total;
  for (const Var<T>& p : planes) {
    Var<T> t = PlaneTvSum(p);
    total = total.valid() ? Add(total, t) : t;
  }
  return MulScalar(total, T(1) / static_cast<T>(config.TotalFeatures()));
}

std::vector<uint8_t> SerializeTriplanes(const MultiResTriplanes& tri) {
  CheckPlanes(tri.planes, tri.config);
  std::vector<uint8_t> out;
  ByteWriter w(&out);
  w.U32(tri.config.channels);
  for (int v : tri.config.resolutions) w.U32(v);
  for (const auto& p : tri.planes) w.F32s(p.data);
  return out;
}

MultiResTriplanes DeserializeTriplanes(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  TriplaneConfig config;
  config.channels = static_cast<int>(r.U32());
  for (int& v : config.resolutions) v = static_cast<int>(r.U32());
  if (config.channels <= 0 || config.channels > 4096) {
    throw FormatError("triplane dump: bad channel count");
  }
  for (int v : config.resolutions) {
    if (v <= 0 || v > 8192) throw FormatError("triplane dump: bad resolution");
  }
  MultiResTriplanes tri = MultiResTriplanes::Zeros(config);
  for (auto& p : tri.planes) r.F32s(p.data);
  if (r.remaining() != 0) throw FormatError("triplane dump: trailing bytes");
  return tri;
}

void WriteTriplanes(const std::string& path, const MultiResTriplanes& tri) {
  WriteFileBytes(path, SerializeTriplanes(tri));
}

MultiResTriplanes ReadTriplanes(const std::string& path) {
  return DeserializeTriplanes(ReadFileBytes(path));
}

#define NERFCODEC_INSTANTIATE_TRIPLANE(T)                                     \
  template void CheckPlanes<T>(const PlaneSet<T>&, const TriplaneConfig&);    \
  template PlaneVars<T> BindPlanes<T>(Tape<T>&, const PlaneSet<T>&, bool);    \
  template std::vector<T> PlaneCoords<T>(int, int, std::span<const T>);       \
  template Var<T> SampleFeatures<T>(const PlaneVars<T>&, std::span<const T>); \
  template Var<T> PlaneTvSum<T>(Var<T>);                                      \
  template Var<T> TvLoss<T>(const PlaneVars<T>&, const TriplaneConfig&);

NERFCODEC_INSTANTIATE_TRIPLANE(float)
NERFCODEC_INSTANTIATE_TRIPLANE(double)

}  // namespace nerfcodec
