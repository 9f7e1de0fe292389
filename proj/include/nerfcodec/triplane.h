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

// Multi-resolution triplanes.
//
// Nine planes, indexed by (k, s) with k in {xy, yz, xz} and s in {0, 1, 2}
// (coarse to fine). Each plane is [C, V_s, V_s]. The column axis is the first
// named coordinate and the row axis the second, so the xy plane is stored
// [C, y, x], yz is [C, z, y] and xz is [C, z, x].
//
// A coordinate x in [-1, 1] maps to the continuous texel coordinate
// (x + 1) / 2 * V - 0.5, i.e. texel centers sit at the centers of V equal
// cells. Points outside the cube are clamped onto it.

#ifndef NERFCODEC_TRIPLANE_H_
#define NERFCODEC_TRIPLANE_H_

#include <array>
#include <span>
#include <string>
#include <vector>

#include "nerfcodec/ops.h"
#include "nerfcodec/tape.h"
#include "nerfcodec/tensor.h"

namespace nerfcodec {

enum PlaneAxis : int { kXY = 0, kYZ = 1, kXZ = 2 };

inline constexpr int kNumPlanes = 3;
inline constexpr int kNumScales = 3;

// Position of plane (k, s) in plane-major order.
inline int PlaneIndex(int k, int s) { return k * kNumScales + s; }

struct TriplaneConfig {
  int channels = 32;
  std::array<int, kNumScales> resolutions = {64, 128, 256};

  // 3 * C * sum(V_s^2): the number of features across all nine planes.
  int64_t TotalFeatures() const;
  // sum(V_s^2)
  int64_t TexelsPerPlaneSet() const;
  Shape PlaneShape(int s) const {
    return {channels, resolutions[s], resolutions[s]};
  }
  bool operator==(const TriplaneConfig&) const = default;
};

template <typename T>
using PlaneSet = std::array<Tensor<T>, kNumPlanes * kNumScales>;
template <typename T>
using PlaneVars = std::array<Var<T>, kNumPlanes * kNumScales>;

struct MultiResTriplanes {
  TriplaneConfig config;
  PlaneSet<float> planes;

  static MultiResTriplanes Zeros(const TriplaneConfig& config);
  Tensor<float>& plane(int k, int s) { return planes[PlaneIndex(k, s)]; }
  const Tensor<float>& plane(int k, int s) const {
    return planes[PlaneIndex(k, s)];
  }
};

// Throws ContractError when the planes do not match `config`.
template <typename T>
void CheckPlanes(const PlaneSet<T>& planes, const TriplaneConfig& config);

// Leaves referencing each plane.
template <typename T>
PlaneVars<T> BindPlanes(Tape<T>& tape, const PlaneSet<T>& planes,
                        bool requires_grad);

// Continuous texel coordinates (u, v) on plane k for N points (x, y, z).
template <typename T>
std::vector<T> PlaneCoords(int k, int resolution, std::span<const T> points);

// f_tri(p) for N points: per plane, concatenate the bilinear samples of the
// three scales ([N, 3C]); then sum the three planes.
template <typename T>
Var<T> SampleFeatures(const PlaneVars<T>& planes, std::span<const T> points);

// Sum of squared horizontal and vertical neighbor differences of a [C, H, W]
// plane.
template <typename T>
Var<T> PlaneTvSum(Var<T> plane);

// Sum of PlaneTvSum over the nine planes divided by TotalFeatures().
template <typename T>
Var<T> TvLoss(const PlaneVars<T>& planes, const TriplaneConfig& config);

// Raw dump: u32 {C, V1, V2, V3} then the planes as f32, plane-major, all
// little-endian.
void WriteTriplanes(const std::string& path, const MultiResTriplanes& tri);
MultiResTriplanes ReadTriplanes(const std::string& path);
std::vector<uint8_t> SerializeTriplanes(const MultiResTriplanes& tri);
MultiResTriplanes DeserializeTriplanes(std::span<const uint8_t> bytes);

}  // namespace nerfcodec

#endif  // NERFCODEC_TRIPLANE_H_
