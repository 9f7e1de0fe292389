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

#include <Eigen/SVD>
#include <cmath>
#include <random>

#include "nerfcodec/mlp.h"
#include "nerfcodec/peft.h"
#include "testing/finite_difference.h"
#include "testing/gradient_cases.h"

namespace nerfcodec {
namespace {

using testing::GradientRelativeError;
using testing::MlpProbe;
using testing::ProbeInputs;
using testing::RandomTensor;
using testing::UnitDirs;
using testing::Values;

MlpConfig TinyConfig() {
  MlpConfig c;
  c.feature_dim = 6;
  c.hidden = 8;
  c.depth = 4;
  c.pe_frequencies = 2;
  return c;
}

TEST(PositionalEncodeTest, LengthsAndValues) {
  const std::vector<float> d = {1, 0, 0};
  EXPECT_EQ(PositionalEncode<float>(d, 0), d);
  const auto pe = PositionalEncode<float>(d, 4);
  ASSERT_EQ(pe.size(), 27u);
  EXPECT_NEAR(pe[3], 0.0f, 1e-6);   // sin(pi * 1)
  EXPECT_EQ(pe[6], -1.0f);          // cos(pi * 1)
  EXPECT_EQ(pe[4], 0.0f);           // sin(0)
  EXPECT_EQ(pe[7], 1.0f);           // cos(0)
}

TEST(MlpTest, DensityIgnoresViewDirection) {
  const MlpConfig c = TinyConfig();
  const RadianceMlp mlp = RadianceMlp::Init(c, 1);
  std::mt19937_64 rng(2);
  const int n = 16;
  const auto feat = Values<float>(n * c.feature_dim, rng);
  const auto pts = Values<float>(3 * n, rng);
  auto run = [&](const std::vector<float>& dirs) {
    Tape<float> tape;
    const auto vars = BindMlp<float>(tape, mlp, nullptr, false, false);
    const auto out = EvalPoints<float>(
        vars, tape.Constant(Tensor<float>({n, c.feature_dim}, feat)), pts,
        PositionalEncode<float>(dirs, c.pe_frequencies));
    return std::make_pair(out.rgb.value().data, out.sigma.value().data);
  };
  const auto a = run(UnitDirs<float>(n, rng));
  const auto b = run(UnitDirs<float>(n, rng));
  EXPECT_EQ(a.second, b.second);
  EXPECT_NE(a.first, b.first);
}

TEST(MlpTest, ZeroWeightsGiveLn2AndHalfGray) {
  const MlpConfig c = TinyConfig();
  const RadianceMlp mlp = RadianceMlp::Zeros(c);
  std::mt19937_64 rng(3);
  Tape<float> tape;
  const auto out = EvalPoints<float>(
      BindMlp<float>(tape, mlp, nullptr, false, false),
      tape.Constant(Tensor<float>({4, c.feature_dim}, Values<float>(4 * c.feature_dim, rng))),
      Values<float>(12, rng), PositionalEncode<float>(UnitDirs<float>(4, rng), 2));
  for (float s : out.sigma.value().data) EXPECT_FLOAT_EQ(s, std::log(2.0f));
  for (float v : out.rgb.value().data) EXPECT_EQ(v, 0.5f);
}

TEST(MlpTest, DimensionMismatchIsContractViolation) {
  const MlpConfig c = TinyConfig();
  const RadianceMlp mlp = RadianceMlp::Zeros(c);
  Tape<float> tape;
  EXPECT_THROW(EvalPoints<float>(BindMlp<float>(tape, mlp, nullptr, false, false),
                                 tape.Constant(Tensor<float>({2, 5})),
                                 std::vector<float>(6), std::vector<float>(30)),
               ContractError);
}

TEST(MlpTest, SigmaGradientWrtFeaturesMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const MlpProbe probe(rng);
    auto in = ProbeInputs(probe.config, probe.n, 0, rng);
    std::vector<bool> check(in.size(), false);
    check[0] = true;
    auto fn = [&](Tape<double>& tape, const std::vector<Var<double>>& v) {
      return probe(tape, v, false);
    };
    EXPECT_LE(GradientRelativeError(fn, in, 1e-5, check), 1e-4);
  }
}

TEST(MlpTest, AdapterForwardGradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const MlpProbe probe(rng);
    auto in = ProbeInputs(probe.config, probe.n, 2, rng);
    auto fn = [&](Tape<double>& tape, const std::vector<Var<double>>& v) {
      return probe(tape, v, true);
    };
    EXPECT_LE(GradientRelativeError(fn, in, 1e-5), 1e-4);
  }
}

TEST(LoraTest, WrappingIsBitwiseIdentity) {
  const MlpConfig c = TinyConfig();
  const RadianceMlp mlp = RadianceMlp::Init(c, 6);
  const LoraAdapter lora = WrapMlp(mlp, 4, 7);
  std::mt19937_64 rng(8);
  const int n = 32;
  const auto feat = Values<float>(n * c.feature_dim, rng);
  const auto pts = Values<float>(3 * n, rng);
  const auto pe = PositionalEncode<float>(UnitDirs<float>(n, rng), 2);
  auto run = [&](const LoraAdapter* a) {
    Tape<float> tape;
    const auto out = EvalPoints<float>(
        BindMlp<float>(tape, mlp, a, false, true),
        tape.Constant(Tensor<float>({n, c.feature_dim}, feat)), pts, pe);
    return out.rgb.value().data;
  };
  EXPECT_EQ(run(nullptr), run(&lora));
  for (const auto& l : lora.layers) {
    for (float x : l.a.data) EXPECT_EQ(x, 0.0f);
  }
}

TEST(LoraTest, ObjaverseAdapterPayload) {
  const MlpConfig c = MlpConfig::ForProfile(MlpProfile::kObjaverse, 32);
  const int64_t bytes = 2 * AdapterParameterCount(c, 4) * 4;
  EXPECT_EQ(bytes, 233536);
  EXPECT_NEAR(bytes / 1e6, 0.233, 0.233 * 0.15);
  const RadianceMlp mlp = RadianceMlp::Zeros(c);
  EXPECT_EQ(WrapMlp(mlp, 4, 0).ParameterCount(), AdapterParameterCount(c, 4));
}

TEST(LoraTest, UpdateRankIsAtMostAdapterRank) {
  const MlpConfig c = TinyConfig();
  const RadianceMlp mlp = RadianceMlp::Init(c, 9);
  std::mt19937_64 rng(10);
  for (int rank : {1, 2, 3}) {
    LoraAdapter lora = WrapMlp(mlp, rank, 11);
    for (auto& l : lora.layers) {
      l.a = Cast<float>(RandomTensor(l.a.shape, rng));
      l.b = Cast<float>(RandomTensor(l.b.shape, rng));
    }
    const RadianceMlp merged = MergeAdapter(mlp, lora);
    for (size_t i = 0; i < mlp.layers.size(); ++i) {
      const auto& w0 = mlp.layers[i].weight;
      const auto& w1 = merged.layers[i].weight;
      Eigen::MatrixXd d(w0.shape[0], w0.shape[1]);
      for (int64_t r = 0; r < w0.shape[0]; ++r) {
        for (int64_t q = 0; q < w0.shape[1]; ++q) {
          d(r, q) = double(w1[r * w0.shape[1] + q]) - double(w0[r * w0.shape[1] + q]);
        }
      }
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(d);
      svd.setThreshold(1e-4);
      EXPECT_LE(svd.rank(), rank);
    }
  }
}

TEST(DeltaTest, InitialDeltaIsExactlyZero) {
  TriplaneConfig cfg;
  cfg.channels = 4;
  cfg.resolutions = {4, 8, 16};
  for (uint64_t seed : {0u, 1u, 99u}) {
    const DeltaFactors d = InitDelta<float>(cfg, 2, seed);
    for (int k = 0; k < 3; ++k) {
      for (int s = 0; s < 3; ++s) {
        for (float x : MaterializeDeltaValue(d, k, s).data) {
          EXPECT_EQ(std::bit_cast<uint32_t>(x), 0u);
        }
      }
    }
  }
  EXPECT_EQ(InitDelta<float>(cfg, 1, 5).m[4].data, InitDelta<float>(cfg, 1, 5).m[4].data);
  EXPECT_NE(InitDelta<float>(cfg, 1, 5).m[4].data, InitDelta<float>(cfg, 1, 6).m[4].data);
}

TEST(DeltaTest, DefaultMatrixPayload) {
  const DeltaFactors d = InitDelta<float>(TriplaneConfig{}, 1, 0);
  EXPECT_EQ(d.MatrixParameterCount(), 258048);
  EXPECT_EQ(d.MatrixParameterCount() * 4, 1032192);
  int64_t n = 0;
  for (const auto& m : d.m) n += m.size();
  EXPECT_EQ(n, 258048);
}

TEST(DeltaTest, HandOuterProduct) {
  Tape<float> tape;
  Var<float> m = tape.Constant(Tensor<float>({1, 2, 2}, std::vector<float>{1, 0, 0, 1}));
  Var<float> v = tape.Constant(Tensor<float>({1, 2}, std::vector<float>{1, 2}));
  EXPECT_EQ(MaterializeDelta(m, v).value().data,
            (std::vector<float>{1, 0, 0, 1, 2, 0, 0, 2}));
}

TEST(DeltaTest, MaterializeGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const int r = 1 + trial % 3;
    std::vector<Tensor<double>> in = {RandomTensor({r, 3, 3}, rng),
                                      RandomTensor({r, 4}, rng)};
    const Tensor<double> w = RandomTensor({4, 3, 3}, rng);
    auto fn = [&](Tape<double>& tape, const std::vector<Var<double>>& v) {
      return SumReduce(Mul(MaterializeDelta(v[0], v[1]), tape.Constant(w)));
    };
    EXPECT_LE(GradientRelativeError(fn, in), 1e-4);
  }
}

TEST(TrainableParamsTest, ModeSelection) {
  FinetuneState state;
  state.base = MultiResTriplanes::Zeros(TriplaneConfig{});
  const MlpConfig c = MlpConfig::ForProfile(MlpProfile::kObjaverse, 32);
  state.coarse = RadianceMlp::Zeros(c);
  state.fine = RadianceMlp::Zeros(c);
  EXPECT_THROW(TrainableParams(&state, FinetuneMode::kPeft), ContractError);
  AttachAdapters(&state, 1, 4, 0);

  EXPECT_TRUE(TrainableParams(&state, FinetuneMode::kWoFt).empty());

  const auto peft = TrainableParams(&state, FinetuneMode::kPeft);
  EXPECT_EQ(CountParameters(peft),
            258048 + 3 * 32 * 1 + 2 * AdapterParameterCount(c, 4));
  for (const auto& p : peft) {
    for (const auto& plane : state.base.planes) EXPECT_NE(p.tensor, &plane);
  }
  EXPECT_EQ(CountParameters(TrainableParams(&state, FinetuneMode::kPeftPlus)),
            CountParameters(peft));

  const auto full = TrainableParams(&state, FinetuneMode::kFullFt);
  int64_t plane_bytes = 0;
  for (const auto& p : full) {
    if (p.group == ParamGroup::kPlane) plane_bytes += 4 * p.tensor->size();
  }
  EXPECT_EQ(plane_bytes, 33030144);
  EXPECT_EQ(CountParameters(full) * 4, 33030144 + 2 * 4 * c.DenseParameterCount());
  EXPECT_THROW(ParseFinetuneMode("half-ft"), ContractError);
}

}  // namespace
}  // namespace nerfcodec
