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

#include "nerfcodec/entropy.h"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "testing/finite_difference.h"
#include "testing/payloads.h"

namespace nerfcodec {
namespace {

std::vector<float> InitParams() { return InitDensity<float>().data; }

using testing::RandomParams;
using testing::RandomSymbols;

TEST(DensityTest, PmfSumsToAtMostOne) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = trial == 0 ? InitParams() : RandomParams(rng);
    double sum = 0;
    for (int x = -2000; x <= 2000; ++x) sum += DensityProb(p, x);
    EXPECT_LE(sum, 1 + 1e-6);
    EXPECT_GT(sum, 0.99);
  }
}

TEST(DensityTest, InitialModelIsSymmetric) {
  const auto p = InitParams();
  for (double x : {0.0, 0.3, 1.0, 2.5, 7.0, 30.0}) {
    EXPECT_NEAR(DensityProb(p, x), DensityProb(p, -x), 1e-6) << x;
  }
  Tape<double> tape;
  Var<double> params = tape.Constant(InitDensity<double>());
  Var<double> xs = tape.Constant(Tensor<double>({4}, std::vector<double>{-3, -1, 1, 3}));
  const auto& lik = DensityLikelihood(params, xs).value();
  EXPECT_NEAR(lik[0], lik[3], 1e-12);
  EXPECT_NEAR(lik[1], lik[2], 1e-12);
}

TEST(DensityTest, TapeAndValueAgree) {
  std::mt19937_64 rng(2);
  const auto p = RandomParams(rng);
  Tape<double> tape;
  Var<double> params = tape.Constant(Tensor<double>({kDensityParams},
                                                    std::vector<double>(p.begin(), p.end())));
  std::vector<double> xs = {-4.2, -1, 0, 0.5, 3.3, 12};
  Var<double> x = tape.Constant(Tensor<double>({6}, xs));
  const auto& lik = DensityLikelihood(params, x).value();
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(lik[i], DensityProb(p, xs[i]), 1e-9);
}

TEST(DensityTest, UniformReferenceCostsEightBits) {
  const std::vector<uint32_t> freqs(256, 256);
  std::vector<int32_t> symbols(1000);
  std::mt19937_64 rng(3);
  for (auto& s : symbols) s = static_cast<int32_t>(rng() % 256);
  EXPECT_DOUBLE_EQ(IdealBits(symbols, freqs, 0) / symbols.size(), 8.0);
}

TEST(RateLossTest, PeakedDensityOnZerosIsNearlyFree) {
  Tensor<double> params = InitDensity<double>();
  for (int i = 0; i < 3; ++i) params[i] = 60;  // very steep CDF around 0
  Tape<double> tape;
  Var<double> m = tape.Constant(Tensor<double>({2, 8, 8}));
  const double bits = StreamBits(tape.Constant(params), m).value().item();
  EXPECT_LE(bits / 128, 0.01);
}

TEST(RateLossTest, DoublingTheElementsDoublesTheRate) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> d(0.0, 3.0);
  const Tensor<double> params = InitDensity<double>();
  for (int trial = 0; trial < 100; ++trial) {
    Tensor<double> one({1, 32, 32}), two({2, 32, 32});
    for (auto& v : one.data) v = d(rng);
    for (auto& v : two.data) v = d(rng);
    Tape<double> tape;
    Var<double> pv = tape.Constant(params);
    const double b1 = StreamBits(pv, AddUniformNoise(tape.Constant(one), trial)).value().item();
    const double b2 = StreamBits(pv, AddUniformNoise(tape.Constant(two), trial + 1000)).value().item();
    EXPECT_NEAR(b2 / b1, 2.0, 0.2) << trial;
  }
}

TEST(RateLossTest, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(5);
  Tensor<double> m = testing::RandomTensor({2, 3, 3}, rng, -4, 4);
  Tensor<double> params = InitDensity<double>();
  for (auto& v : params.data) v += std::normal_distribution<double>(0, 0.3)(rng);
  testing::ScalarFn f = [](Tape<double>&, const std::vector<Var<double>>& v) {
    return StreamBits(v[1], AddUniformNoise(v[0], 77));
  };
  EXPECT_LE(testing::GradientRelativeError(f, {m, params}, 1e-5), 1e-3);
}

TEST(QuantizeRoundTest, ZerosAndTies) {
  IntBounds b{5, 5};
  const std::vector<float> zeros(10, 0.0f);
  EXPECT_EQ(QuantizeRound(zeros, &b), std::vector<int32_t>(10, 0));
  EXPECT_EQ(b, (IntBounds{0, 0}));
  const std::vector<float> ties = {0.5f, 1.5f, -0.5f, 2.5f, -1.5f, 0.49f};
  EXPECT_EQ(QuantizeRound(ties, &b), (std::vector<int32_t>{0, 2, 0, 2, -2, 0}));
  EXPECT_EQ(b, (IntBounds{-2, 2}));
}

TEST(FrequencyTableTest, PositiveAndExactTotal) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = RandomParams(rng);
    const int32_t lo = -static_cast<int32_t>(rng() % 3000);
    const IntBounds b{lo, lo + static_cast<int32_t>(rng() % 5000)};
    const auto f = FrequencyTable(p, b);
    EXPECT_EQ(std::accumulate(f.begin(), f.end(), uint64_t{0}), kFreqTotal);
    for (uint32_t v : f) EXPECT_GE(v, 1u);
  }
  EXPECT_THROW(FrequencyTable(InitParams(), {0, 70000}), ContractError);
}

TEST(RangeCoderTest, ConstantStreamIsTiny) {
  const std::vector<int32_t> s(10000, 3);
  const auto bytes = EncodeStream(s, InitParams(), {3, 3});
  EXPECT_LE(bytes.size(), 30u);
  EXPECT_EQ(DecodeStream(bytes, InitParams(), {3, 3}, 10000), s);
}

TEST(RangeCoderTest, RandomStreamsRoundTripNearTheIdealLength) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    IntBounds b;
    const int64_t n = 1 + static_cast<int64_t>(rng() % 3000);
    const auto symbols = RandomSymbols(rng, n, &b);
    const auto params = RandomParams(rng);
    const auto bytes = EncodeStream(symbols, params, b);
    ASSERT_EQ(DecodeStream(bytes, params, b, n), symbols) << trial;
    const double ideal = IdealBits(symbols, FrequencyTable(params, b), b.min) / 8;
    EXPECT_LE(bytes.size(), ideal * 1.001 + 64) << trial;
  }
}

TEST(RangeCoderTest, SkewedTablesRoundTrip) {
  std::vector<uint32_t> freqs = {1, kFreqTotal - 3, 1, 1};
  std::mt19937_64 rng(8);
  std::vector<int32_t> s(5000);
  for (auto& v : s) v = static_cast<int32_t>(rng() % 4) - 1;
  const auto bytes = RangeEncode(s, freqs, -1);
  EXPECT_EQ(RangeDecode(bytes, freqs, -1, 5000), s);
}

TEST(RangeCoderTest, ErrorsAreReported) {
  const auto p = InitParams();
  const std::vector<int32_t> s = {0, 1, -1, 2};
  EXPECT_THROW(EncodeStream(s, p, {-1, 1}), ContractError);
  const auto bytes = EncodeStream(s, p, {-1, 2});
  EXPECT_THROW(DecodeStream(std::span(bytes).first(2), p, {-1, 2}, 4), FormatError);
  EXPECT_THROW(RangeEncode(s, std::vector<uint32_t>{5, 5}, 0), ContractError);
}

}  // namespace
}  // namespace nerfcodec
