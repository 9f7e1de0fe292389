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

#include "nerfcodec/encoder.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "testing/finite_difference.h"

namespace nerfcodec {
namespace {

using testing::RandomTensor;

EncoderConfig SmallEncoder() {
  EncoderConfig cfg;
  cfg.channels = 4;
  cfg.volume_res = 8;
  cfg.pyramid = {4, 6, 6};
  return cfg;
}

TriplaneConfig SmallTriplanes() {
  TriplaneConfig cfg;
  cfg.channels = 4;
  cfg.resolutions = {8, 16, 32};
  return cfg;
}

Scene SmallScene(uint64_t seed, int n_views) {
  SynthSpec spec = RandomSynthSpec(seed, n_views, 16);
  return SynthScene(spec);
}

std::vector<const CameraView*> ViewPtrs(const Scene& scene) {
  std::vector<const CameraView*> out;
  for (const auto& v : scene.views) out.push_back(&v);
  return out;
}

CameraView SquareView(int size, double f, const Eigen::Vector3d& position) {
  CameraView view;
  view.width = view.height = size;
  view.intrinsics = {f, f, size / 2.0, size / 2.0};
  view.pose.block<3, 1>(0, 3) = position;
  return view;
}

TEST(ExtractFeaturesTest, OneMapPerViewWithSharedWeights) {
  const Scene scene = SmallScene(1, 16);
  const auto w = EncoderWeights::Init(SmallEncoder(), 3);
  Tape<float> tape;
  const auto enc = BindEncoder(tape, w, false);
  const auto maps = ExtractFeatures(enc, ViewPtrs(scene));
  ASSERT_EQ(maps.size(), 16u);
  for (const auto& m : maps) EXPECT_EQ(m.shape(), (Shape{4, 16, 16}));
}

TEST(ExtractFeaturesTest, IdenticalImagesGiveIdenticalMaps) {
  const Scene scene = SmallScene(2, 2);
  CameraView copy = scene.views[0];
  const auto w = EncoderWeights::Init(SmallEncoder(), 4);
  Tape<float> tape;
  const auto enc = BindEncoder(tape, w, false);
  const auto maps = ExtractFeatures(enc, {&scene.views[0], &copy});
  EXPECT_EQ(maps[0].value().data, maps[1].value().data);
}

TEST(ExtractFeaturesTest, ZeroImageAndZeroBiasesGiveZeroFeatures) {
  auto w = EncoderWeights::Init(SmallEncoder(), 5);
  for (auto& p : w.Params()) {
    if (p.name.ends_with(".bias")) std::fill(p.tensor->data.begin(), p.tensor->data.end(), 0.0f);
  }
  Image black(16, 16);
  Tape<float> tape;
  const auto enc = BindEncoder(tape, w, false);
  const auto map = ExtractFeatureMap(enc, black);
  for (float v : map.value().data) EXPECT_EQ(v, 0.0f);
}

TEST(ExtractFeaturesTest, InconsistentSizesAreRejected) {
  const auto w = EncoderWeights::Init(SmallEncoder(), 6);
  CameraView a = SquareView(16, 16, {0, 0, 4});
  CameraView b = SquareView(8, 8, {0, 0, 4});
  a.image = Image(16, 16);
  b.image = Image(8, 8);
  Tape<float> tape;
  const auto enc = BindEncoder(tape, w, false);
  EXPECT_THROW(ExtractFeatures(enc, {&a, &b}), ContractError);
  EXPECT_THROW(ExtractFeatures(enc, {}), ContractError);
}

TEST(UnprojectTest, CoordinateTensorShape) {
  EXPECT_EQ(GridCoordinates<float>(16).size(), 3u * 16 * 16 * 16);
  const auto g = GridCoordinates<double>(4);
  EXPECT_EQ(g[0], -0.75);
  EXPECT_EQ(g[3], -0.25);
  EXPECT_EQ(g[3 * 4 + 1], -0.25);
  EXPECT_EQ(g[3 * 16 + 2], -0.25);
}

TEST(UnprojectTest, TexelCenterHitIsExact) {
  // Grid point (0.25, 0.25, 0.25) of a 4^3 grid at depth 4 lands on pixel
  // center (8.5, 7.5), i.e. texel (8, 7).
  const CameraView view = SquareView(16, 8, {0, 0, 4.25});
  std::mt19937_64 rng(7);
  Tensor<double> map = RandomTensor({3, 16, 16}, rng);
  Tape<double> tape;
  const auto vol = Unproject(tape.Leaf(&map, false), view, 4);
  ASSERT_EQ(vol.features.shape(), (Shape{3, 4, 4, 4}));
  const int64_t idx = (2 * 4 + 2) * 4 + 2;
  EXPECT_EQ(vol.mask[idx], 1.0);
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(vol.features.value()[c * 64 + idx], map[(c * 16 + 7) * 16 + 8]);
  }
}

TEST(UnprojectTest, BehindTheCameraIsEmpty) {
  const CameraView view = SquareView(16, 8, {0, 0, -3});
  std::mt19937_64 rng(8);
  Tensor<float> map = Cast<float>(RandomTensor({2, 16, 16}, rng));
  Tape<float> tape;
  const auto vol = Unproject(tape.Leaf(&map, false), view, 4);
  for (float v : vol.mask.data) EXPECT_EQ(v, 0.0f);
  for (float v : vol.features.value().data) EXPECT_EQ(v, 0.0f);
}

TEST(UnprojectTest, MaskMatchesBruteForceFrustumTest) {
  const Scene scene = SmallScene(9, 4);
  for (const auto& view : scene.views) {
    Tensor<float> map({1, 16, 16}, 1.0f);
    Tape<float> tape;
    const auto vol = Unproject(tape.Leaf(&map, false), view, 8);
    const auto grid = GridCoordinates<float>(8);
    for (int i = 0; i < 512; ++i) {
      const Eigen::Vector3d p(grid[3 * i], grid[3 * i + 1], grid[3 * i + 2]);
      const Eigen::Vector3d pc =
          view.pose.block<3, 3>(0, 0).transpose() * (p - view.origin());
      const double depth = -pc.z();
      const double u = view.intrinsics.cx + view.intrinsics.fx * pc.x() / depth;
      const double v = view.intrinsics.cy - view.intrinsics.fy * pc.y() / depth;
      const bool inside = depth > 0 && u >= 0 && u < 16 && v >= 0 && v < 16;
      EXPECT_EQ(vol.mask[i], inside ? 1.0f : 0.0f) << i;
      EXPECT_FLOAT_EQ(vol.features.value()[i], inside ? 1.0f : 0.0f) << i;
    }
  }
}

UnprojectedVolume<float> RandomVolume(Tape<float>& tape, std::mt19937_64& rng,
                                      float mask_value) {
  UnprojectedVolume<float> v;
  v.features = tape.Constant(Cast<float>(RandomTensor({2, 3, 3, 3}, rng)));
  v.mask = Tensor<float>({3, 3, 3}, mask_value);
  return v;
}

TEST(AggregateTest, IdenticalVolumesMeanToTheVolume) {
  std::mt19937_64 rng(10);
  Tape<float> tape;
  const auto a = RandomVolume(tape, rng, 1);
  const auto four = MaskedMean<float>({a, a, a, a});
  EXPECT_EQ(four.value().data, a.features.value().data);
  const auto three = MaskedMean<float>({a, a, a});
  for (int64_t i = 0; i < three.value().size(); ++i) {
    EXPECT_FLOAT_EQ(three.value()[i], a.features.value()[i]);
  }
}

TEST(AggregateTest, OccludedViewDoesNotDilute) {
  std::mt19937_64 rng(11);
  Tape<float> tape;
  const auto seen = RandomVolume(tape, rng, 1);
  auto hidden = RandomVolume(tape, rng, 0);
  const auto mean = MaskedMean<float>({hidden, seen});
  EXPECT_EQ(mean.value().data, seen.features.value().data);
}

TEST(AggregateTest, PermutationIsBitwiseInvariant) {
  std::mt19937_64 rng(12);
  Tape<float> tape;
  std::vector<UnprojectedVolume<float>> vols;
  for (int i = 0; i < 5; ++i) {
    vols.push_back(RandomVolume(tape, rng, 1));
    vols.back().mask[i] = 0;
  }
  const auto ref = MaskedMean(vols).value().data;
  for (int trial = 0; trial < 3; ++trial) {
    std::shuffle(vols.begin(), vols.end(), rng);
    EXPECT_EQ(MaskedMean(vols).value().data, ref);
  }
  EXPECT_THROW(MaskedMean<float>({}), ContractError);
}

TEST(AxisPoolTest, ConstantVolumeGivesConstantPlanes) {
  Tape<float> tape;
  const auto planes = AxisPool(tape.Constant(Tensor<float>({2, 4, 4, 4}, 0.375f)));
  for (const auto& p : planes) {
    EXPECT_EQ(p.shape(), (Shape{2, 4, 4}));
    for (float v : p.value().data) EXPECT_EQ(v, 0.375f);
  }
}

TEST(AxisPoolTest, ZeroMeanRampInZVanishesOnXy) {
  Tensor<float> vol({1, 4, 4, 4});
  for (int z = 0; z < 4; ++z) {
    for (int i = 0; i < 16; ++i) vol[z * 16 + i] = z - 1.5f;
  }
  Tape<float> tape;
  const auto planes = AxisPool(tape.Constant(vol));
  for (float v : planes[kXY].value().data) EXPECT_EQ(v, 0.0f);
}

TEST(AxisPoolTest, MatchesBruteForceMeans) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor<double> vol = RandomTensor({3, 2, 2, 2}, rng);
    Tape<double> tape;
    const auto planes = AxisPool(tape.Constant(vol));
    auto at = [&](int c, int z, int y, int x) {
      return vol[((c * 2 + z) * 2 + y) * 2 + x];
    };
    for (int c = 0; c < 3; ++c) {
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          // xy [C, y, x]; yz [C, z, y]; xz [C, z, x].
          EXPECT_EQ(planes[kXY].value()[(c * 2 + a) * 2 + b],
                    (at(c, 0, a, b) + at(c, 1, a, b)) / 2);
          EXPECT_EQ(planes[kYZ].value()[(c * 2 + a) * 2 + b],
                    (at(c, a, b, 0) + at(c, a, b, 1)) / 2);
          EXPECT_EQ(planes[kXZ].value()[(c * 2 + a) * 2 + b],
                    (at(c, a, 0, b) + at(c, a, 1, b)) / 2);
        }
      }
    }
  }
}

std::array<Var<float>, 3> RandomInputPlanes(Tape<float>& tape,
                                            const TriplaneConfig& cfg,
                                            std::mt19937_64& rng) {
  std::array<Var<float>, 3> planes;
  for (auto& p : planes) {
    p = tape.Constant(Cast<float>(RandomTensor(cfg.PlaneShape(0), rng)));
  }
  return planes;
}

TEST(GenerateTriplanesTest, DefaultProfileShapes) {
  TriplaneConfig cfg;  // C = 32, {64, 128, 256}
  const auto w = GeneratorWeights::Init(cfg, 14);
  std::mt19937_64 rng(14);
  Tape<float> tape;
  const auto out =
      GenerateTriplanes(BindGenerator(tape, w, false), RandomInputPlanes(tape, cfg, rng));
  for (int k = 0; k < kNumPlanes; ++k) {
    for (int s = 0; s < kNumScales; ++s) {
      EXPECT_EQ(out[PlaneIndex(k, s)].shape(), cfg.PlaneShape(s));
    }
  }
}

TEST(GenerateTriplanesTest, IdentityConfigurationPassesPlanesThrough) {
  const TriplaneConfig cfg = SmallTriplanes();
  auto w = GeneratorWeights::Init(cfg, 15);
  for (auto& p : w.Params()) {
    std::fill(p.tensor->data.begin(), p.tensor->data.end(), 0.0f);
  }
  const int c = cfg.channels;
  for (auto& conv : w.aware[0]) {
    for (int i = 0; i < c; ++i) conv.weight[((i * 3 * c + i) * 3 + 1) * 3 + 1] = 1;
  }
  std::mt19937_64 rng(15);
  Tape<float> tape;
  const auto in = RandomInputPlanes(tape, cfg, rng);
  const auto out = GenerateTriplanes(BindGenerator(tape, w, false), in);
  for (int k = 0; k < kNumPlanes; ++k) {
    EXPECT_EQ(out[PlaneIndex(k, 0)].value().data, in[k].value().data);
  }
}

TEST(GenerateTriplanesTest, CrossPlaneInformationFlows) {
  const TriplaneConfig cfg = SmallTriplanes();
  const auto w = GeneratorWeights::Init(cfg, 16);
  std::mt19937_64 rng(16);
  Tensor<float> xy = Cast<float>(RandomTensor(cfg.PlaneShape(0), rng));
  Tensor<float> yz = Cast<float>(RandomTensor(cfg.PlaneShape(0), rng));
  Tensor<float> xz = Cast<float>(RandomTensor(cfg.PlaneShape(0), rng));
  auto run = [&](const Tensor<float>& yz_in) {
    Tape<float> tape;
    const auto out = GenerateTriplanes(
        BindGenerator(tape, w, false),
        {tape.Constant(xy), tape.Constant(yz_in), tape.Constant(xz)});
    return out[PlaneIndex(kXY, 0)].value().data;
  };
  const auto base = run(yz);
  Tensor<float> probe = yz;
  probe[37] += 1.0f;
  EXPECT_NE(run(probe), base);
  EXPECT_EQ(run(yz), base);
}

TEST(GenerateTriplanesTest, WrongInputResolutionIsRejected) {
  const TriplaneConfig cfg = SmallTriplanes();
  const auto w = GeneratorWeights::Init(cfg, 17);
  Tape<float> tape;
  Var<float> p = tape.Constant(Tensor<float>({4, 4, 4}));
  EXPECT_THROW(GenerateTriplanes(BindGenerator(tape, w, false), {p, p, p}),
               ContractError);
}

TEST(EncoderTest, ViewPermutationIsBitwiseInvariant) {
  const Scene scene = SmallScene(18, 6);
  const auto w = EncoderWeights::Init(SmallEncoder(), 18);
  auto views = ViewPtrs(scene);
  auto encode = [&](const std::vector<const CameraView*>& vs) {
    Tape<float> tape;
    const auto planes = EncodeViews(BindEncoder(tape, w, false), vs);
    std::vector<float> all;
    for (const auto& p : planes) {
      all.insert(all.end(), p.value().data.begin(), p.value().data.end());
    }
    return all;
  };
  const auto ref = encode(views);
  std::mt19937_64 rng(18);
  for (int trial = 0; trial < 3; ++trial) {
    std::shuffle(views.begin(), views.end(), rng);
    EXPECT_EQ(encode(views), ref);
  }
}

TEST(EncoderTest, GradientsReachEveryWeight) {
  const Scene scene = SmallScene(19, 3);
  auto w = EncoderWeights::Init(SmallEncoder(), 19);
  Tape<float> tape;
  const auto enc = BindEncoder(tape, w, true);
  const auto planes = EncodeViews(enc, ViewPtrs(scene));
  Var<float> loss = SumReduce(Square(Concat<float>(
      {Reshape(planes[0], {NumElements(planes[0].shape())}),
       Reshape(planes[1], {NumElements(planes[1].shape())}),
       Reshape(planes[2], {NumElements(planes[2].shape())})}, 0)));
  tape.Backward(loss);
  double norm = 0;
  for (const auto& t : tape.Grad(enc.stem.weight).data) norm += t * t;
  EXPECT_GT(norm, 0);
}

}  // namespace
}  // namespace nerfcodec
