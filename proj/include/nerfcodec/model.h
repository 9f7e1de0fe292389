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

// The shared pretrained model: encoder, vector quantizer, triplane generator
// and the coarse and fine radiance MLPs, plus its on-disk archive.

#ifndef NERFCODEC_MODEL_H_
#define NERFCODEC_MODEL_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nerfcodec/encoder.h"
#include "nerfcodec/mlp.h"
#include "nerfcodec/scene.h"
#include "nerfcodec/triplane.h"
#include "nerfcodec/vq.h"

namespace nerfcodec {

struct ModelConfig {
  TriplaneConfig triplane;  // C and V1..V3; the feature volume is V1^3
  std::array<int, 3> pyramid = {16, 32, 32};
  int code_dim = 16;
  int codebook_size = 1024;
  MlpProfile profile = MlpProfile::kObjaverse;
  int pe_frequencies = 4;
  int delta_rank = 1;
  int lora_rank = 4;

  // C = 32, V = {64, 128, 256}, C' = 16, K = 1024, 512-wide MLPs.
  static ModelConfig Default();
  // C = 8, V = {16, 32, 64}, C' = 8, K = 128, 32-wide MLPs, R = 4, adapter
  // rank 8.
  static ModelConfig Desk();

  EncoderConfig encoder() const;
  VqConfig vq() const;
  MlpConfig mlp() const;
  // ceil(log2 K)
  int IndexBits() const;
  void Validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct BaseModel {
  ModelConfig config;
  EncoderWeights encoder;
  VqWeights vq;
  GeneratorWeights generator;
  RadianceMlp coarse;
  RadianceMlp fine;

  static BaseModel Init(const ModelConfig& config, uint64_t seed);
  std::vector<NamedTensor<float>> Params();
};

// Archive: magic "NCMD", u32 version, the config, then every parameter as
// (name, rank, dims, f32 data), little-endian.
std::vector<uint8_t> SerializeModel(const BaseModel& model);
BaseModel DeserializeModel(std::span<const uint8_t> bytes);
void WriteModel(const std::string& path, const BaseModel& model);
BaseModel ReadModel(const std::string& path);

// Copies plane values out of a tape.
MultiResTriplanes PlanesFromVars(const TriplaneConfig& config,
                                 const PlaneVars<float>& vars);

struct FeedForwardResult {
  std::vector<int32_t> indices;  // 3 V'^2 codebook indices
  MultiResTriplanes planes;      // generated from the quantized codes
};

// Single forward pass over the scene's encoder views.
FeedForwardResult EncodeScene(const BaseModel& model, const Scene& scene);

// Receiver side of the feed-forward path: indices to triplanes.
MultiResTriplanes PlanesFromIndices(const BaseModel& model,
                                    std::span<const int32_t> indices);

// The encoder views of `scene` (all views when none is marked).
std::vector<const CameraView*> EncoderViewPtrs(const Scene& scene);

}  // namespace nerfcodec

#endif  // NERFCODEC_MODEL_H_
