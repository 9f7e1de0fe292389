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
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "nerfcodec/tensor.h"

namespace nerfcodec {
namespace {

Image RandomImage(int h, int w, uint64_t seed, float lo = 0.0f,
                  float hi = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  Image img(h, w);
  for (float& v : img.rgb) v = u(rng);
  return img;
}

Image Constant(int h, int w, float value) {
  Image img(h, w);
  for (float& v : img.rgb) v = value;
  return img;
}

TEST(MetricsTest, IdenticalImages) {
  const Image a = RandomImage(32, 32, 1);
  EXPECT_EQ(Psnr(a, a), kMaxPsnr);
  EXPECT_DOUBLE_EQ(Ssim(a, a), 1.0);
  EXPECT_NEAR(MsSsim(a, a), 1.0, 1e-12);
}

TEST(MetricsTest, PsnrOfKnownMse) {
  // A 0.1 offset everywhere gives MSE 0.01.
  EXPECT_NEAR(Psnr(Constant(8, 8, 0.25f), Constant(8, 8, 0.35f)), 20.0, 1e-5);
  EXPECT_NEAR(Psnr(Constant(4, 6, 0.0f), Constant(4, 6, 1.0f)), 0.0, 1e-12);
}

TEST(MetricsTest, LuminanceOfConstantOffsetMatchesClosedForm) {
  // 11 x 11 images admit exactly one window position.
  const Image a = RandomImage(11, 11, 7, 0.0f, 0.9f);
  Image b = a;
  for (float& v : b.rgb) v += 0.1f;
  double g[11], sum = 0;
  for (int i = 0; i < 11; ++i) {
    g[i] = std::exp(-(i - 5.0) * (i - 5.0) / 4.5);
    sum += g[i];
  }
  const double c1 = 1e-4;
  double expected = 0;
  for (int c = 0; c < 3; ++c) {
    double mu_a = 0, mu_b = 0;
    for (int y = 0; y < 11; ++y) {
      for (int x = 0; x < 11; ++x) {
        const double w = g[y] * g[x] / (sum * sum);
        mu_a += w * a.at(y, x, c);
        mu_b += w * b.at(y, x, c);
      }
    }
    expected += (2 * mu_a * mu_b + c1) / (mu_a * mu_a + mu_b * mu_b + c1) / 3;
  }
  const SsimStats s = SsimDetail(a, b);
  EXPECT_NEAR(s.luminance, expected, 1e-6);
  // The offset leaves variances and covariance unchanged up to float noise.
  EXPECT_NEAR(s.contrast_structure, 1.0, 1e-4);
  EXPECT_NEAR(s.ssim, s.luminance * s.contrast_structure, 1e-4);
}

TEST(MetricsTest, SsimIsSymmetricAndDropsWithNoise) {
  const Image a = RandomImage(24, 24, 3);
  Image slight = a, heavy = a;
  std::mt19937_64 rng(4);
  std::normal_distribution<float> n(0.0f, 1.0f);
  for (size_t i = 0; i < a.rgb.size(); ++i) {
    const float e = n(rng);
    slight.rgb[i] = std::clamp(a.rgb[i] + 0.02f * e, 0.0f, 1.0f);
    heavy.rgb[i] = std::clamp(a.rgb[i] + 0.2f * e, 0.0f, 1.0f);
  }
  EXPECT_DOUBLE_EQ(Ssim(a, heavy), Ssim(heavy, a));
  EXPECT_GT(Ssim(a, slight), Ssim(a, heavy));
  EXPECT_GT(MsSsim(a, slight), MsSsim(a, heavy));
  EXPECT_LE(Ssim(a, heavy), 1.0);
  EXPECT_GE(Ssim(a, heavy), -1.0);
}

TEST(MetricsTest, ShapeErrors) {
  EXPECT_THROW(Psnr(Image(4, 4), Image(4, 5)), ContractError);
  EXPECT_THROW(Ssim(Image(4, 4), Image(5, 4)), ContractError);
  EXPECT_THROW(MsSsim(Image(8, 8), Image(8, 8)), ContractError);
}

}  // namespace
}  // namespace nerfcodec
