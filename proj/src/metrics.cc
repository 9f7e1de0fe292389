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

#include "nerfcodec/metrics.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "nerfcodec/tensor.h"

namespace nerfcodec {
namespace {

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void CheckPair(const Image& a, const Image& b) {
  if (a.height != b.height || a.width != b.width || a.empty() ||
      a.rgb.size() != b.rgb.size()) {
    throw ContractError("metrics: images must be non-empty with equal shapes");
  }
}

std::vector<double> GaussianWindow(int n) {
  std::vector<double> w(n);
  const double c = 0.5 * (n - 1);
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    w[i] = std::exp(-(i - c) * (i - c) / (2 * 1.5 * 1.5));
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  return w;
}

// One channel as a dense h x w array.
using Plane = std::vector<double>;

// Separable valid-region filtering.
Plane Filter(const Plane& x, int h, int w, const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int oh = h - n + 1, ow = w - n + 1;
  Plane rows(static_cast<size_t>(h) * ow, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int j = 0; j < ow; ++j) {
      double s = 0;
      for (int t = 0; t < n; ++t) s += k[t] * x[y * w + j + t];
      rows[y * ow + j] = s;
    }
  }
  Plane out(static_cast<size_t>(oh) * ow, 0.0);
  for (int i = 0; i < oh; ++i) {
    for (int j = 0; j < ow; ++j) {
      double s = 0;
      for (int t = 0; t < n; ++t) s += k[t] * rows[(i + t) * ow + j];
      out[i * ow + j] = s;
    }
  }
  return out;
}

struct Channels {
  int h = 0;
  int w = 0;
  std::array<Plane, 3> c;
};

Channels Split(const Image& img) {
  Channels out;
  out.h = img.height;
  out.w = img.width;
  for (int ch = 0; ch < 3; ++ch) {
    out.c[ch].resize(static_cast<size_t>(img.height) * img.width);
    for (int i = 0; i < img.height * img.width; ++i) {
      out.c[ch][i] = img.rgb[3 * i + ch];
    }
  }
  return out;
}

Channels Pool2(const Channels& x) {
  Channels out;
  out.h = x.h / 2;
  out.w = x.w / 2;
  for (int ch = 0; ch < 3; ++ch) {
    out.c[ch].resize(static_cast<size_t>(out.h) * out.w);
    for (int y = 0; y < out.h; ++y) {
      for (int j = 0; j < out.w; ++j) {
        const Plane& p = x.c[ch];
        out.c[ch][y * out.w + j] =
            0.25 * (p[2 * y * x.w + 2 * j] + p[2 * y * x.w + 2 * j + 1] +
                    p[(2 * y + 1) * x.w + 2 * j] + p[(2 * y + 1) * x.w + 2 * j + 1]);
      }
    }
  }
  return out;
}

SsimStats Stats(const Channels& a, const Channels& b) {
  const int n = std::min({11, a.h, a.w});
  const auto k = GaussianWindow(n);
  SsimStats s;
  int64_t count = 0;
  for (int ch = 0; ch < 3; ++ch) {
    const Plane& x = a.c[ch];
    const Plane& y = b.c[ch];
    Plane xx(x.size()), yy(x.size()), xy(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const Plane mx = Filter(x, a.h, a.w, k), my = Filter(y, a.h, a.w, k);
    const Plane sxx = Filter(xx, a.h, a.w, k), syy = Filter(yy, a.h, a.w, k);
    const Plane sxy = Filter(xy, a.h, a.w, k);
    for (size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cov = sxy[i] - mx[i] * my[i];
      const double l = (2 * mx[i] * my[i] + kC1) / (mx[i] * mx[i] + my[i] * my[i] + kC1);
      const double cs = (2 * cov + kC2) / (vx + vy + kC2);
      s.luminance += l;
      s.contrast_structure += cs;
      s.ssim += l * cs;
      ++count;
    }
  }
  s.luminance /= count;
  s.contrast_structure /= count;
  s.ssim /= count;
  return s;
}

}  // namespace

double Psnr(const Image& a, const Image& b) {
  CheckPair(a, b);
  double se = 0;
  for (size_t i = 0; i < a.rgb.size(); ++i) {
    const double d = static_cast<double>(a.rgb[i]) - b.rgb[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.rgb.size());
  if (mse <= 0) return kMaxPsnr;
  return std::min(kMaxPsnr, -10.0 * std::log10(mse));
}

SsimStats SsimDetail(const Image& a, const Image& b) {
  CheckPair(a, b);
  return Stats(Split(a), Split(b));
}

double Ssim(const Image& a, const Image& b) { return SsimDetail(a, b).ssim; }

double MsSsim(const Image& a, const Image& b) {
  CheckPair(a, b);
  if (a.height < 16 || a.width < 16) {
    throw ContractError("MsSsim: images must be at least 16x16");
  }
  static constexpr std::array<double, 5> kWeights = {0.0448, 0.2856, 0.3001,
                                                     0.2363, 0.1333};
  Channels x = Split(a), y = Split(b);
  double out = 1.0;
  for (int j = 0; j < 5; ++j) {
    const SsimStats s = Stats(x, y);
    const double term = j < 4 ? s.contrast_structure : s.ssim;
    out *= std::pow(std::max(term, 0.0), kWeights[j]);
    if (j < 4) {
      x = Pool2(x);
      y = Pool2(y);
    }
  }
  return out;
}

}  // namespace nerfcodec
