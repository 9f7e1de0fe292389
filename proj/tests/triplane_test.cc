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

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "nerfcodec/peft.h"
#include "nerfcodec/triplane.h"
#include "testing/finite_difference.h"

namespace nerfcodec {
namespace {

using testing::GradientRelativeError;
using testing::RandomTensor;

TriplaneConfig SmallConfig(int c = 3) {
  TriplaneConfig cfg;
  cfg.channels = c;
  cfg.resolutions = {4, 8, 16};
  return cfg;
}

template <typename T>
PlaneSet<T> RandomPlanes(const TriplaneConfig& cfg, std::mt19937_64& rng) {
  PlaneSet<T> planes;
  for (int k = 0; k < kNumPlanes; ++k) {
    for (int s = 0; s < kNumScales; ++s) {
      planes[PlaneIndex(k, s)] = Cast<T>(RandomTensor(cfg.PlaneShape(s), rng));
    }
  }
  return planes;
}

std::vector<float> RandomPoints(int n, std::mt19937_64& rng, double lo = -1,
                                double hi = 1) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<float> p(3 * n);
  for (auto& x : p) x = static_cast<float>(d(rng));
  return p;
}

TEST(SampleFeaturesTest, OutputIsThreeTimesChannels) {
  TriplaneConfig cfg = SmallConfig(32);
  std::mt19937_64 rng(1);
  const PlaneSet<float> planes = RandomPlanes<float>(cfg, rng);
  Tape<float> tape;
  const auto pts = RandomPoints(7, rng);
  Var<float> f = SampleFeatures<float>(BindPlanes(tape, planes, false), pts);
  EXPECT_EQ(f.shape(), (Shape{7, 96}));
}

TEST(SampleFeaturesTest, ConstantPlanesGiveThreeTimesTheConstant) {
  const TriplaneConfig cfg = SmallConfig(2);
  MultiResTriplanes tri = MultiResTriplanes::Zeros(cfg);
  for (auto& p : tri.planes) {
    for (int64_t i = 0; i < p.size(); ++i) p[i] = i < p.size() / 2 ? 0.25f : -1.5f;
  }
  std::mt19937_64 rng(2);
  const auto pts = RandomPoints(50, rng, -1.3, 1.3);
  Tape<float> tape;
  const auto& f = SampleFeatures<float>(BindPlanes(tape, tri.planes, false), pts).value();
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 6; ++j) {
      EXPECT_EQ(f[i * 6 + j], j % 2 == 0 ? 0.75f : -4.5f);
    }
  }
}

// Texel centre of index i on a V-wide axis.
float Node(int i, int v) { return (i + 0.5f) / v * 2.0f - 1.0f; }

TEST(SampleFeaturesTest, GridNodeReturnsNodeValueExactly) {
  const TriplaneConfig cfg = SmallConfig(3);
  std::mt19937_64 rng(3);
  for (int k = 0; k < kNumPlanes; ++k) {
    MultiResTriplanes tri = MultiResTriplanes::Zeros(cfg);
    tri.plane(k, 1) = Cast<float>(RandomTensor(cfg.PlaneShape(1), rng));
    const int v = cfg.resolutions[1];
    static constexpr int kAxes[3][2] = {{0, 1}, {1, 2}, {0, 2}};
    for (int row = 0; row < v; ++row) {
      for (int col = 0; col < v; ++col) {
        std::vector<float> p = {0.37f, -0.11f, 0.52f};
        p[kAxes[k][0]] = Node(col, v);
        p[kAxes[k][1]] = Node(row, v);
        Tape<float> tape;
        const auto& f = SampleFeatures<float>(BindPlanes(tape, tri.planes, false), p).value();
        for (int c = 0; c < 3; ++c) {
          EXPECT_EQ(f[3 + c], tri.plane(k, 1)[(c * v + row) * v + col]);
        }
      }
    }
  }
}

TEST(SampleFeaturesTest, GridLineIsLinearInterpolation) {
  const TriplaneConfig cfg = SmallConfig(1);
  std::mt19937_64 rng(4);
  MultiResTriplanes tri = MultiResTriplanes::Zeros(cfg);
  tri.plane(kXY, 2) = Cast<float>(RandomTensor(cfg.PlaneShape(2), rng));
  const int v = 16;
  std::uniform_real_distribution<double> frac(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const int row = trial % v, col = (trial * 7) % (v - 1);
    const double a = frac(rng);
    const float x = static_cast<float>(Node(col, v) + a * 2.0 / v);
    const std::vector<float> p = {x, Node(row, v), 0.0f};
    Tape<float> tape;
    const float got =
        SampleFeatures<float>(BindPlanes(tape, tri.planes, false), p).value()[2];
    const float* r = tri.plane(kXY, 2).data.data() + row * v;
    EXPECT_NEAR(got, (1 - a) * r[col] + a * r[col + 1], 1e-5);
  }
}

TEST(SampleFeaturesTest, GradientMatchesFiniteDifferences) {
  const TriplaneConfig cfg = SmallConfig(2);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Tensor<double>> inputs;
    for (const auto& p : RandomPlanes<double>(cfg, rng)) inputs.push_back(p);
    const auto pf = RandomPoints(6, rng, -1.1, 1.1);
    const std::vector<double> pts(pf.begin(), pf.end());
    const Tensor<double> w = RandomTensor({6, 6}, rng);
    auto fn = [&](Tape<double>& tape, const std::vector<Var<double>>& v) {
      PlaneVars<double> pv;
      std::copy(v.begin(), v.end(), pv.begin());
      return SumReduce(Mul(SampleFeatures<double>(pv, pts), tape.Constant(w)));
    };
    EXPECT_LE(GradientRelativeError(fn, inputs), 1e-4);
  }
}

TEST(TvLossTest, HandExample) {
  Tape<float> tape;
  Var<float> p = tape.Constant(Tensor<float>({1, 2, 2}, std::vector<float>{0, 1, 2, 3}));
  EXPECT_EQ(PlaneTvSum(p).value().item(), 10.0f);
}

TEST(TvLossTest, ConstantPlanesGiveZeroAndScalingIsQuadratic) {
  const TriplaneConfig cfg = SmallConfig(2);
  MultiResTriplanes tri = MultiResTriplanes::Zeros(cfg);
  for (auto& p : tri.planes) {
    for (int64_t i = 0; i < p.size(); ++i) p[i] = i < p.size() / 2 ? 0.5f : 2.0f;
  }
  {
    Tape<float> tape;
    EXPECT_EQ(TvLoss(BindPlanes(tape, tri.planes, false), cfg).value().item(), 0.0f);
  }
  std::mt19937_64 rng(6);
  const PlaneSet<float> planes = RandomPlanes<float>(cfg, rng);
  PlaneSet<float> scaled = planes;
  for (auto& p : scaled) {
    for (auto& x : p.data) x *= 4.0f;
  }
  Tape<float> tape;
  const float a = TvLoss(BindPlanes(tape, planes, false), cfg).value().item();
  const float b = TvLoss(BindPlanes(tape, scaled, false), cfg).value().item();
  EXPECT_GT(a, 0.0f);
  EXPECT_FLOAT_EQ(b, 16.0f * a);
}

TEST(TvLossTest, NormalisedByTotalFeatureCount) {
  const TriplaneConfig cfg = SmallConfig(2);
  std::mt19937_64 rng(7);
  const PlaneSet<float> planes = RandomPlanes<float>(cfg, rng);
  Tape<float> tape;
  const PlaneVars<float> pv = BindPlanes(tape, planes, false);
  double sum = 0;
  for (const auto& p : pv) sum += PlaneTvSum(p).value().item();
  EXPECT_NEAR(TvLoss(pv, cfg).value().item(),
              sum / (3.0 * 2 * (16 + 64 + 256)), 1e-6);
}

TEST(TvLossTest, ZeroOnlyForPerChannelConstantPlanes) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor<float> p({2, 3, 3}, 1.0f);
    const bool perturb = trial % 2 == 0;
    if (perturb) p[rng() % p.size()] += 0.5f;
    Tape<float> tape;
    const float tv = PlaneTvSum(tape.Constant(p)).value().item();
    EXPECT_GE(tv, 0.0f);
    EXPECT_EQ(tv > 0.0f, perturb);
  }
}

TEST(TvLossTest, GradientMatchesFiniteDifferences) {
  const TriplaneConfig cfg = SmallConfig(2);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Tensor<double>> inputs;
    for (const auto& p : RandomPlanes<double>(cfg, rng)) inputs.push_back(p);
    auto fn = [&](Tape<double>&, const std::vector<Var<double>>& v) {
      PlaneVars<double> pv;
      std::copy(v.begin(), v.end(), pv.begin());
      return TvLoss(pv, cfg);
    };
    EXPECT_LE(GradientRelativeError(fn, inputs), 1e-4);
  }
}

TEST(ComposeTest, ZeroDeltaIsBitwiseIdentity) {
  const TriplaneConfig cfg = SmallConfig(4);
  std::mt19937_64 rng(10);
  const PlaneSet<float> planes = RandomPlanes<float>(cfg, rng);
  const DeltaFactors delta = InitDelta<float>(cfg, 1, 3);
  const auto pts = RandomPoints(10000, rng, -1.2, 1.2);
  Tape<float> tape;
  const PlaneVars<float> base = BindPlanes(tape, planes, false);
  const auto& a = SampleFeatures<float>(base, pts).value().data;
  const auto& b =
      SampleFeatures<float>(ComposeWithDelta(base, BindDelta(tape, delta, false)), pts)
          .value()
          .data;
  EXPECT_EQ(a, b);
}

TEST(ComposeTest, NegatedBaseCancels) {
  const TriplaneConfig cfg = SmallConfig(3);
  std::mt19937_64 rng(11);
  const PlaneSet<float> planes = RandomPlanes<float>(cfg, rng);
  // Rank C with one-hot vectors reproduces any plane set exactly.
  DeltaFactors delta = InitDelta<float>(cfg, cfg.channels, 0);
  for (int s = 0; s < kNumScales; ++s) {
    for (int r = 0; r < cfg.channels; ++r) delta.v[s][r * cfg.channels + r] = -1.0f;
    for (int k = 0; k < kNumPlanes; ++k) {
      delta.m[PlaneIndex(k, s)].data = planes[PlaneIndex(k, s)].data;
    }
  }
  const auto pts = RandomPoints(500, rng);
  Tape<float> tape;
  const auto composed = ComposeWithDelta(BindPlanes(tape, planes, false),
                                         BindDelta(tape, delta, false));
  for (float x : SampleFeatures<float>(composed, pts).value().data) {
    EXPECT_EQ(x, 0.0f);
  }
}

TEST(ComposeTest, MatchesExplicitlyMaterialisedSum) {
  const TriplaneConfig cfg = SmallConfig(4);
  std::mt19937_64 rng(12);
  const PlaneSet<float> planes = RandomPlanes<float>(cfg, rng);
  DeltaFactors delta = InitDelta<float>(cfg, 1, 5);
  for (auto& v : delta.v) v = Cast<float>(RandomTensor(v.shape, rng));
  for (auto& m : delta.m) m = Cast<float>(RandomTensor(m.shape, rng));
  PlaneSet<float> summed = planes;
  for (int k = 0; k < kNumPlanes; ++k) {
    for (int s = 0; s < kNumScales; ++s) {
      const Tensor<float> d = MaterializeDeltaValue(delta, k, s);
      for (int64_t i = 0; i < d.size(); ++i) summed[PlaneIndex(k, s)][i] += d[i];
    }
  }
  const auto pts = RandomPoints(2000, rng);
  Tape<float> tape;
  const auto& a = SampleFeatures<float>(
                      ComposeWithDelta(BindPlanes(tape, planes, false),
                                       BindDelta(tape, delta, false)),
                      pts)
                      .value()
                      .data;
  const auto& b = SampleFeatures<float>(BindPlanes(tape, summed, false), pts).value().data;
  for (size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-6);
}

TEST(ComposeTest, ShapeMismatchIsContractViolation) {
  const TriplaneConfig cfg = SmallConfig(2);
  TriplaneConfig other = cfg;
  other.resolutions = {4, 8, 8};
  std::mt19937_64 rng(13);
  const PlaneSet<float> planes = RandomPlanes<float>(cfg, rng);
  const DeltaFactors delta = InitDelta<float>(other, 1, 0);
  Tape<float> tape;
  EXPECT_THROW(ComposeWithDelta(BindPlanes(tape, planes, false),
                                BindDelta(tape, delta, false)),
               ContractError);
}

TEST(ComposeTest, GradientsReachOnlyDeltaWhenBaseFrozen) {
  const TriplaneConfig cfg = SmallConfig(2);
  std::mt19937_64 rng(14);
  const PlaneSet<float> planes = RandomPlanes<float>(cfg, rng);
  DeltaFactors delta = InitDelta<float>(cfg, 1, 1);
  const auto pts = RandomPoints(20, rng);
  Tape<float> tape;
  const PlaneVars<float> base = BindPlanes(tape, planes, false);
  const DeltaVars<float> dv = BindDelta(tape, delta, true);
  tape.Backward(SumReduce(SampleFeatures<float>(ComposeWithDelta(base, dv), pts)));
  for (const auto& b : base) EXPECT_FALSE(tape.HasGrad(b));
  double norm = 0;
  for (const auto& v : dv.v) {
    for (float g : tape.Grad(v).data) norm += std::abs(g);
  }
  EXPECT_GT(norm, 0.0);
}

TEST(TriplaneDumpTest, RoundTripAndHeader) {
  const TriplaneConfig cfg = SmallConfig(2);
  std::mt19937_64 rng(15);
  MultiResTriplanes tri;
  tri.config = cfg;
  tri.planes = RandomPlanes<float>(cfg, rng);
  const auto bytes = SerializeTriplanes(tri);
  ASSERT_EQ(bytes.size(), 16 + 4 * static_cast<size_t>(cfg.TotalFeatures()));
  EXPECT_EQ(bytes[0], 2);
  EXPECT_EQ(bytes[4], 4);
  EXPECT_EQ(bytes[8], 8);
  EXPECT_EQ(bytes[12], 16);
  const std::string path =
      (std::filesystem::temp_directory_path() / "nerfcodec_tri_test.bin").string();
  WriteTriplanes(path, tri);
  const MultiResTriplanes back = ReadTriplanes(path);
  std::remove(path.c_str());
  EXPECT_EQ(back.config, cfg);
  for (size_t i = 0; i < tri.planes.size(); ++i) {
    EXPECT_EQ(back.planes[i].data, tri.planes[i].data);
  }
  std::vector<uint8_t> cut(bytes.begin(), bytes.end() - 1);
  EXPECT_THROW(DeserializeTriplanes(cut), FormatError);
}

}  // namespace
}  // namespace nerfcodec
