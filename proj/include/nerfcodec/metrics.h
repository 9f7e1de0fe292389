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

// Image quality metrics on [0, 1] RGB images.

#ifndef NERFCODEC_METRICS_H_
#define NERFCODEC_METRICS_H_

#include "nerfcodec/scene.h"

namespace nerfcodec {

inline constexpr double kMaxPsnr = 99.0;

// 10 log10(1 / MSE) over the RGB values, capped at kMaxPsnr.
double Psnr(const Image& a, const Image& b);

struct SsimStats {
  double ssim = 0;
  double luminance = 0;           // mean of (2 mu_a mu_b + C1) / (...)
  double contrast_structure = 0;  // mean of (2 s_ab + C2) / (...)
};

// Gaussian window (sigma 1.5, 11 taps, shrunk to the image size), K1 = 0.01,
// K2 = 0.03, averaged over valid window positions and the three channels.
SsimStats SsimDetail(const Image& a, const Image& b);
double Ssim(const Image& a, const Image& b);

// Five scales with weights (0.0448, 0.2856, 0.3001, 0.2363, 0.1333) and 2x2
// average pooling between scales; negative terms are clamped to zero. Both
// sides must be at least 16 pixels.
double MsSsim(const Image& a, const Image& b);

}  // namespace nerfcodec

#endif  // NERFCODEC_METRICS_H_
