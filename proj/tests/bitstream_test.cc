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

#include "nerfcodec/bitstream.h"

#include <gtest/gtest.h>

#include <random>

#include "nerfcodec/model.h"
#include "testing/payloads.h"

namespace nerfcodec {
namespace {

using testing::RandomPayload;
using testing::SamePayload;
using testing::TinyConfig;

TEST(PackBitsTest, MsbFirst) {
  const std::vector<int32_t> v = {1, 2};
  EXPECT_EQ(PackBits(v, 3), (std::vector<uint8_t>{0x28}));
  const std::vector<int32_t> w = {1023, 0, 512};
  EXPECT_EQ(PackBits(w, 10), (std::vector<uint8_t>{0xFF, 0xC0, 0x08, 0x00}));
  EXPECT_EQ(UnpackBits(PackBits(w, 10), 10, 3), w);
  EXPECT_THROW(PackBits(std::vector<int32_t>{8}, 3), ContractError);
}

TEST(PackBitsTest, RoundTripsRandomWidths) {
  std::mt19937_64 rng(1);
  for (int bits = 1; bits <= 20; ++bits) {
    std::vector<int32_t> v(1 + rng() % 500);
    for (auto& x : v) x = static_cast<int32_t>(rng() & ((1u << bits) - 1));
    EXPECT_EQ(UnpackBits(PackBits(v, bits), bits, v.size()), v);
  }
}

TEST(BitstreamTest, MagicAndVersion) {
  std::mt19937_64 rng(2);
  const auto bytes = PackBitstream(RandomPayload(TinyConfig(), FinetuneMode::kWoFt, rng));
  EXPECT_EQ(bytes[0], 0x43);
  EXPECT_EQ(bytes[1], 0x4E);
  EXPECT_EQ(bytes[2], 0x52);
  EXPECT_EQ(bytes[3], 0x46);
  EXPECT_EQ(bytes[4], 1);
}

TEST(BitstreamTest, WoFtCarriesOnlyIndices) {
  std::mt19937_64 rng(3);
  const ModelConfig c = TinyConfig();
  const auto bytes = PackBitstream(RandomPayload(c, FinetuneMode::kWoFt, rng));
  const SizeReport rep = ReportSizes(bytes);
  EXPECT_EQ(rep.section[0], (c.vq().NumCodes() * 7 + 7) / 8);
  EXPECT_EQ(rep.section[1], 0);
  EXPECT_EQ(rep.section[2], 0);
  EXPECT_EQ(rep.section[3], 0);
  EXPECT_EQ(rep.feature, 0);
  EXPECT_EQ(rep.mlp, 0);
  EXPECT_EQ(rep.codes, rep.total);
}

TEST(BitstreamTest, EveryModeRoundTripsBitExactly) {
  std::mt19937_64 rng(4);
  const ModelConfig c = TinyConfig();
  for (int trial = 0; trial < 40; ++trial) {
    const auto mode = static_cast<FinetuneMode>(trial % 4);
    const CodecPayload p = RandomPayload(c, mode, rng);
    const auto bytes = PackBitstream(p);
    const CodecPayload q = UnpackBitstream(bytes, c);
    EXPECT_TRUE(SamePayload(p, q)) << FinetuneModeName(mode);
    EXPECT_EQ(PackBitstream(q), bytes);
    const SizeReport rep = ReportSizes(bytes);
    EXPECT_EQ(rep.codes + rep.feature + rep.mlp, rep.total);
    EXPECT_EQ(rep.total, static_cast<int64_t>(bytes.size()));
  }
}

TEST(BitstreamTest, DefaultPeftSizes) {
  std::mt19937_64 rng(5);
  const ModelConfig c = ModelConfig::Default();
  const auto bytes = PackBitstream(RandomPayload(c, FinetuneMode::kPeft, rng));
  const SizeReport rep = ReportSizes(bytes);
  EXPECT_EQ(rep.section[1], 1032192);
  EXPECT_EQ(rep.section[2], 3 * 32 * 4);
  EXPECT_NEAR(rep.feature / 1e6, 1.033, 0.0005);
  EXPECT_EQ(rep.mlp, 233536);
  const std::string table = SizeTableMarkdown({"PEFT"}, {rep});
  EXPECT_NE(table.find("| feature (M payload) | 1.033 |"), std::string::npos) << table;
}

TEST(BitstreamTest, DefaultFullFtFeatureRow) {
  std::mt19937_64 rng(6);
  const ModelConfig c = ModelConfig::Default();
  const auto bytes = PackBitstream(RandomPayload(c, FinetuneMode::kFullFt, rng));
  const SizeReport rep = ReportSizes(bytes);
  EXPECT_EQ(rep.feature, 33030144);
  EXPECT_EQ(UnpackBitstream(bytes, c).planes.planes[8].data,
            UnpackBitstream(bytes, c).planes.planes[8].data);
}

TEST(BitstreamTest, PeftPlusRequiresIntegers) {
  std::mt19937_64 rng(7);
  CodecPayload p = RandomPayload(TinyConfig(), FinetuneMode::kPeftPlus, rng);
  p.delta.m[3][5] = 0.25f;
  EXPECT_THROW(PackBitstream(p), ContractError);
}

TEST(BitstreamTest, CorruptionIsDetected) {
  std::mt19937_64 rng(8);
  const ModelConfig c = TinyConfig();
  const auto good = PackBitstream(RandomPayload(c, FinetuneMode::kPeftPlus, rng));
  auto bad = good;
  bad[0] = 'X';
  EXPECT_THROW(UnpackBitstream(bad, c), FormatError);
  bad = good;
  bad[4] = 2;
  EXPECT_THROW(UnpackBitstream(bad, c), FormatError);
  bad = good;
  bad.back() ^= 0x10;
  EXPECT_THROW(UnpackBitstream(bad, c), FormatError);
  bad = good;
  bad.pop_back();
  EXPECT_THROW(UnpackBitstream(bad, c), FormatError);
  EXPECT_THROW(UnpackBitstream(std::span(good).first(20), c), FormatError);
  ModelConfig other = c;
  other.codebook_size = 128;
  EXPECT_THROW(UnpackBitstream(good, other), FormatError);
}

TEST(ModelArchiveTest, RoundTrip) {
  ModelConfig c = ModelConfig::Desk();
  const BaseModel m = BaseModel::Init(c, 3);
  const auto bytes = SerializeModel(m);
  const BaseModel r = DeserializeModel(bytes);
  EXPECT_EQ(r.config, c);
  EXPECT_EQ(SerializeModel(r), bytes);
  auto bad = bytes;
  bad[1] = 'X';
  EXPECT_THROW(DeserializeModel(bad), FormatError);
  EXPECT_THROW(DeserializeModel(std::span(bytes).first(bytes.size() - 1)), FormatError);
}

TEST(ModelTest, IndexBits) {
  ModelConfig c;
  EXPECT_EQ(c.IndexBits(), 10);
  c.codebook_size = 4096;
  EXPECT_EQ(c.IndexBits(), 12);
  c.codebook_size = 100;
  EXPECT_EQ(c.IndexBits(), 7);
  c.codebook_size = 2;
  EXPECT_EQ(c.IndexBits(), 1);
}

TEST(ModelTest, FeedForwardPlanesAreReproducibleFromIndices) {
  const ModelConfig c = TinyConfig();
  const BaseModel m = BaseModel::Init(c, 4);
  SynthSpec spec = RandomSynthSpec(4, 10, 16);
  const Scene scene = SynthScene(spec);
  const FeedForwardResult ff = EncodeScene(m, scene);
  ASSERT_EQ(static_cast<int64_t>(ff.indices.size()), c.vq().NumCodes());
  const MultiResTriplanes planes = PlanesFromIndices(m, ff.indices);
  for (size_t i = 0; i < planes.planes.size(); ++i) {
    EXPECT_EQ(planes.planes[i].data, ff.planes.planes[i].data);
  }
}

}  // namespace
}  // namespace nerfcodec
