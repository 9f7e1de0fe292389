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

// Container for one compressed scene.
//
// Layout, little-endian:
//   "CNRF", u8 version (1), u16 mode,
//   u16 C, u16 V1, u16 V2, u16 V3, u16 C', u16 V', u32 K, u16 R,
//   u16 adapter rank, u16 MLP profile,
//   u16 n_streams, n_streams x (i32 min, i32 max),
//   u16 n_density, n_density x f32,
//   u32 x 4 section lengths, u32 CRC-32 of the sections,
//   sections (a) VQ indices, ceil(log2 K) bits each, MSB first;
//            (b) plane payload; (c) raw f32 v; (d) raw f32 MLP payload.
//
// Section (b) holds, per (plane, scale, rank) stream in that order, a u32
// length and range-coded integers for peft++; raw f32 M for peft; the raw
// planes for full-ft. Section (d) holds the adapter factors (a then b per
// layer, coarse MLP first) for peft and peft++, and the dense MLP weights for
// full-ft. wo-ft carries section (a) only.

#ifndef NERFCODEC_BITSTREAM_H_
#define NERFCODEC_BITSTREAM_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nerfcodec/entropy.h"
#include "nerfcodec/model.h"
#include "nerfcodec/peft.h"

namespace nerfcodec {

inline constexpr uint8_t kBitstreamVersion = 1;

struct CodecPayload {
  FinetuneMode mode = FinetuneMode::kWoFt;
  ModelConfig config;
  std::vector<int32_t> indices;

  // peft and peft++. For peft++ the matrices hold integers.
  DeltaFactors delta;
  LoraAdapter coarse_lora;
  LoraAdapter fine_lora;
  // peft++: one density (kDensityParams reals) and bound pair per stream.
  std::vector<std::vector<float>> density;
  std::vector<IntBounds> bounds;

  // full-ft
  MultiResTriplanes planes;
  RadianceMlp coarse;
  RadianceMlp fine;
};

// Number of entropy-coded streams: 9 R.
int NumStreams(const ModelConfig& config);
// Flat values of stream (k, s, r) of `delta`.
std::span<const float> StreamValues(const DeltaFactors& delta, int stream);

// MSB-first packing of `bits`-wide unsigned values.
std::vector<uint8_t> PackBits(std::span<const int32_t> values, int bits);
std::vector<int32_t> UnpackBits(std::span<const uint8_t> bytes, int bits,
                                int64_t count);

// Throws ContractError when the payload is inconsistent with its mode or
// config (for example non-integer M in peft++).
std::vector<uint8_t> PackBitstream(const CodecPayload& payload);

// `model_config` is the receiver's shared model; the header must agree with
// it. Throws FormatError on bad magic, version, checksum, lengths or
// truncation.
CodecPayload UnpackBitstream(std::span<const uint8_t> bytes,
                             const ModelConfig& model_config);

// Byte counts by component; codes + feature + mlp == total.
struct SizeReport {
  int64_t codes = 0;    // header (without stream bounds and densities) + (a)
  int64_t feature = 0;  // stream bounds + densities + (b) + (c)
  int64_t mlp = 0;      // (d)
  int64_t total = 0;
  int64_t section[4] = {0, 0, 0, 0};
};

SizeReport ReportSizes(std::span<const uint8_t> bytes);

// Table with MB (10^6 bytes) to three decimals.
std::string SizeTableMarkdown(const std::vector<std::string>& labels,
                              const std::vector<SizeReport>& reports);

uint32_t Crc32(std::span<const uint8_t> bytes);

}  // namespace nerfcodec

#endif  // NERFCODEC_BITSTREAM_H_
