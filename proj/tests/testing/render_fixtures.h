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

// Small scenes and fields shared by renderer tests and the acceptance run.

#ifndef NERFCODEC_TESTS_TESTING_RENDER_FIXTURES_H_
#define NERFCODEC_TESTS_TESTING_RENDER_FIXTURES_H_

#include <cmath>
#include <random>
#include <span>

#include "nerfcodec/renderer.h"
#include "testing/finite_difference.h"

namespace nerfcodec::testing {

template <typename T>
RayBatch<T> OneRay(const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  RayBatch<T> r;
  for (int a = 0; a < 3; ++a) {
    r.origins.push_back(static_cast<T>(o[a]));
    r.dirs.push_back(static_cast<T>(d[a]));
  }
  r.ids = {0};
  return r;
}

// Homogeneous slab |x| <= half_width with density sigma0 and albedo a.
inline FieldFn<double> SlabField(double sigma0, double albedo,
                                 double half_width) {
  return [=](Tape<double>& tape, std::span<const double> pts,
             std::span<const double>, bool) {
    const int64_t n = static_cast<int64_t>(pts.size() / 3);
    Tensor<double> s({n, 1}), c({n, 3}, albedo);
    for (int64_t i = 0; i < n; ++i) {
      s[i] = std::abs(pts[3 * i]) <= half_width ? sigma0 : 0.0;
    }
    return MlpOutput<double>{tape.Constant(std::move(c)),
                             tape.Constant(std::move(s))};
  };
}

// Two-channel planes at 4/8/16 with random values and tiny MLPs.
struct TinyModel {
  TriplaneConfig tri;
  PlaneSet<float> planes;
  RadianceMlp coarse, fine;

  explicit TinyModel(uint64_t seed) {
    tri.channels = 2;
    tri.resolutions = {4, 8, 16};
    std::mt19937_64 rng(seed);
    for (int i = 0; i < 9; ++i) {
      planes[i] = Cast<float>(RandomTensor(tri.PlaneShape(i % 3), rng));
    }
    MlpConfig mc;
    mc.feature_dim = 6;
    mc.hidden = 8;
    mc.depth = 4;
    mc.pe_frequencies = 2;
    coarse = RadianceMlp::Init(mc, seed + 1);
    fine = RadianceMlp::Init(mc, seed + 2);
  }
};

inline CameraView ProbeView(int size) {
  CameraView v;
  v.width = v.height = size;
  v.intrinsics = {size * 1.2, size * 1.2, size / 2.0, size / 2.0};
  v.pose = LookAtOrigin(Eigen::Vector3d(2.0, 2.5, 1.5));
  return v;
}

inline BasicRadianceMlp<double> ToDouble(const RadianceMlp& f) {
  BasicRadianceMlp<double> d;
  d.config = f.config;
  for (const auto& l : f.layers) {
    d.layers.push_back({Cast<double>(l.weight), Cast<double>(l.bias)});
  }
  return d;
}

}  // namespace nerfcodec::testing

#endif  // NERFCODEC_TESTS_TESTING_RENDER_FIXTURES_H_
