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

// Two-pass hierarchical volume rendering over a radiance field.

#ifndef NERFCODEC_RENDERER_H_
#define NERFCODEC_RENDERER_H_

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "nerfcodec/mlp.h"
#include "nerfcodec/scene.h"
#include "nerfcodec/triplane.h"

namespace nerfcodec {

struct RenderConfig {
  int n_coarse = 64;
  int n_fine = 64;
  double near = 2.0;
  double far = 6.0;
  std::array<float, 3> background = {1.0f, 1.0f, 1.0f};
  int pe_frequencies = 4;
  uint64_t seed = 0;
  // Jittered strata and random importance draws (training); otherwise
  // strata midpoints and evenly spaced quantiles.
  bool stratified = false;
};

// N rays as flat xyz arrays; ids index the per-ray random streams.
template <typename T>
struct RayBatch {
  std::vector<T> origins;
  std::vector<T> dirs;
  std::vector<uint64_t> ids;
  int64_t size() const { return static_cast<int64_t>(ids.size()); }
};

// Rays through the centers of the listed pixels (row-major indices) of a
// view. Ids are `id_base` + pixel index.
template <typename T>
RayBatch<T> PixelRays(const CameraView& view, std::span<const int64_t> pixels,
                      uint64_t id_base = 0);

// Radiance field evaluated at N points with per-point unit directions.
template <typename T>
using FieldFn = std::function<MlpOutput<T>(
    Tape<T>& tape, std::span<const T> points, std::span<const T> dirs,
    bool fine)>;

// Triplane features decoded by the coarse or fine MLP.
template <typename T>
FieldFn<T> TriplaneField(const PlaneVars<T>& planes, const MlpVars<T>& coarse,
                         const MlpVars<T>& fine, int pe_frequencies);

template <typename T>
struct Composite {
  Var<T> rgb;       // [R, 3]
  Var<T> weights;   // [R, S]
  Var<T> residual;  // [R], transmittance left after the last sample
};

// Alpha compositing of [R, S] densities and [R, S, 3] colors with constant
// interval lengths `deltas` (R x S) over a constant background:
//   w_i = T_i (1 - exp(-sigma_i delta_i)),  T_i = exp(-sum_{j<i} sigma_j delta_j)
template <typename T>
Composite<T> CompositeSamples(Var<T> sigma, Var<T> rgb,
                              std::span<const T> deltas,
                              const std::array<float, 3>& background);

// Distances of n_coarse samples per ray in [near, far].
template <typename T>
std::vector<T> StratifiedSamples(const RayBatch<T>& rays,
                                 const RenderConfig& cfg);

// Inverse-CDF draws from piecewise-constant densities. `weights` holds
// B bins per ray over `edges` (B + 1 per ray); `uniforms` holds n values in
// [0, 1) per ray. A 1e-5 floor keeps empty rays sampling uniformly.
template <typename T>
std::vector<T> SampleInverseCdf(std::span<const T> weights,
                                std::span<const T> edges,
                                std::span<const double> uniforms, int bins,
                                int n);

template <typename T>
struct RenderOutput {
  Composite<T> coarse;
  Composite<T> fine;
  std::vector<T> t_coarse;  // R x n_coarse
  std::vector<T> t_fine;    // R x (n_coarse + n_fine), sorted per ray
};

// Coarse pass at stratified samples, then the fine field at the union of the
// coarse samples and n_fine importance samples. Each sample is composited
// over the span between the midpoints to its neighbours, with the outer spans
// ending at near and far. Sample positions are not
// differentiated. `fine_override`, when non-empty, replaces the merged fine
// sample distances.
template <typename T>
RenderOutput<T> RenderRays(Tape<T>& tape, const RayBatch<T>& rays,
                           const FieldFn<T>& field, const RenderConfig& cfg,
                           std::span<const T> fine_override = {});

struct RenderedImage {
  Image image;  // fine-pass colors with accumulated alpha
  Image coarse;
};

// Forward-only rendering of every pixel of a view in fixed ray chunks.
RenderedImage RenderImage(const CameraView& view, const PlaneSet<float>& planes,
                          const RadianceMlp& coarse, const RadianceMlp& fine,
                          const RenderConfig& cfg);

}  // namespace nerfcodec

#endif  // NERFCODEC_RENDERER_H_
