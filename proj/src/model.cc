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

#include "nerfcodec/model.h"

#include <bit>

#include "nerfcodec/bytes.h"

namespace nerfcodec {
namespace {

constexpr char kModelMagic[4] = {'N', 'C', 'M', 'D'};
constexpr uint32_t kModelVersion = 1;

void WriteConfig(const ModelConfig& c, ByteWriter& w) {
  w.U32(c.triplane.channels);
  for (int v : c.triplane.resolutions) w.U32(v);
  for (int p : c.pyramid) w.U32(p);
  w.U32(c.code_dim);
  w.U32(c.codebook_size);
  w.U32(static_cast<uint32_t>(c.profile));
  w.U32(c.pe_frequencies);
  w.U32(c.delta_rank);
  w.U32(c.lora_rank);
}

ModelConfig ReadConfig(ByteReader& r) {
  ModelConfig c;
  c.triplane.channels = static_cast<int>(r.U32());
  for (int& v : c.triplane.resolutions) v = static_cast<int>(r.U32());
  for (int& p : c.pyramid) p = static_cast<int>(r.U32());
  c.code_dim = static_cast<int>(r.U32());
  c.codebook_size = static_cast<int>(r.U32());
  const uint32_t profile = r.U32();
  if (profile > 2) throw FormatError("model archive: unknown MLP profile");
  c.profile = static_cast<MlpProfile>(profile);
  c.pe_frequencies = static_cast<int>(r.U32());
  c.delta_rank = static_cast<int>(r.U32());
  c.lora_rank = static_cast<int>(r.U32());
  return c;
}

std::array<Var<float>, 3> CodesToPlanes(const BaseModel& model, Tape<float>& tape,
                                        Var<float> codes) {
  const VqVars<float> vq = BindVq(tape, model.vq, false, false);
  return Upsample(vq, codes);
}

}  // namespace

ModelConfig ModelConfig::Default() { return ModelConfig{}; }

ModelConfig ModelConfig::Desk() {
  ModelConfig c;
  c.triplane.channels = 8;
  c.triplane.resolutions = {16, 32, 64};
  c.pyramid = {8, 16, 16};
  c.code_dim = 8;
  c.codebook_size = 128;
  c.profile = MlpProfile::kDesk;
  c.delta_rank = 4;
  c.lora_rank = 8;
  return c;
}

EncoderConfig ModelConfig::encoder() const {
  return {triplane.channels, triplane.resolutions[0], pyramid};
}

VqConfig ModelConfig::vq() const {
  return {triplane.channels, code_dim, codebook_size, triplane.resolutions[0]};
}

MlpConfig ModelConfig::mlp() const {
  MlpConfig m = MlpConfig::ForProfile(profile, triplane.channels);
  m.pe_frequencies = pe_frequencies;
  return m;
}

int ModelConfig::IndexBits() const {
  return std::bit_width(static_cast<uint32_t>(codebook_size - 1));
}

void ModelConfig::Validate() const {
  if (triplane.channels < 1 || code_dim < 1 || codebook_size < 2 ||
      codebook_size > (1 << 24) || delta_rank < 1 || lora_rank < 1 ||
      pe_frequencies < 0) {
    throw ContractError("model config: bad sizes");
  }
  for (int p : pyramid) {
    if (p < 1) throw ContractError("model config: bad pyramid width");
  }
  const auto& v = triplane.resolutions;
  if (v[0] < 4 || v[0] % 4 != 0 || v[1] != 2 * v[0] || v[2] != 2 * v[1]) {
    throw ContractError(
        "model config: resolutions must be V, 2V, 4V with V divisible by 4");
  }
}

BaseModel BaseModel::Init(const ModelConfig& config, uint64_t seed) {
  config.Validate();
  BaseModel m;
  m.config = config;
  m.encoder = EncoderWeights::Init(config.encoder(), seed * 8 + 1);
  m.vq = VqWeights::Init(config.vq(), seed * 8 + 2);
  m.generator = GeneratorWeights::Init(config.triplane, seed * 8 + 3);
  m.coarse = RadianceMlp::Init(config.mlp(), seed * 8 + 4);
  m.fine = RadianceMlp::Init(config.mlp(), seed * 8 + 5);
  return m;
}

std::vector<NamedTensor<float>> BaseModel::Params() {
  std::vector<NamedTensor<float>> out = encoder.Params();
  for (auto& p : vq.Params()) out.push_back(p);
  for (auto& p : generator.Params()) out.push_back(p);
  for (const char* which : {"coarse", "fine"}) {
    RadianceMlp& mlp = std::string(which) == "coarse" ? coarse : fine;
    for (size_t i = 0; i < mlp.layers.size(); ++i) {
      const std::string p = std::string(which) + ".layer" + std::to_string(i);
      out.push_back({p + ".weight", &mlp.layers[i].weight});
      out.push_back({p + ".bias", &mlp.layers[i].bias});
    }
  }
  return out;
}

std::vector<uint8_t> SerializeModel(const BaseModel& model) {
  std::vector<uint8_t> out;
  ByteWriter w(&out);
  w.Bytes({reinterpret_cast<const uint8_t*>(kModelMagic), 4});
  w.U32(kModelVersion);
  WriteConfig(model.config, w);
  auto params = const_cast<BaseModel&>(model).Params();
  w.U32(static_cast<uint32_t>(params.size()));
  for (const auto& p : params) {
    w.Str(p.name);
    w.U8(static_cast<uint8_t>(p.tensor->rank()));
    for (int64_t d : p.tensor->shape) w.U32(static_cast<uint32_t>(d));
    w.F32s(p.tensor->data);
  }
  return out;
}

BaseModel DeserializeModel(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  const auto magic = r.Bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kModelMagic)) {
    throw FormatError("model archive: bad magic");
  }
  if (r.U32() != kModelVersion) throw FormatError("model archive: bad version");
  ModelConfig config = ReadConfig(r);
  try {
    config.Validate();
  } catch (const ContractError& e) {
    throw FormatError(std::string("model archive: ") + e.what());
  }
  BaseModel m = BaseModel::Init(config, 0);
  auto params = m.Params();
  if (r.U32() != params.size()) throw FormatError("model archive: parameter count");
  for (auto& p : params) {
    if (r.Str() != p.name) throw FormatError("model archive: unexpected tensor " + p.name);
    const int rank = r.U8();
    Shape shape(rank);
    for (auto& d : shape) d = r.U32();
    if (shape != p.tensor->shape) {
      throw FormatError("model archive: shape mismatch for " + p.name);
    }
    r.F32s(p.tensor->data);
  }
  if (r.remaining() != 0) throw FormatError("model archive: trailing bytes");
  return m;
}

void WriteModel(const std::string& path, const BaseModel& model) {
  WriteFileBytes(path, SerializeModel(model));
}

BaseModel ReadModel(const std::string& path) {
  return DeserializeModel(ReadFileBytes(path));
}

MultiResTriplanes PlanesFromVars(const TriplaneConfig& config,
                                 const PlaneVars<float>& vars) {
  MultiResTriplanes tri;
  tri.config = config;
  for (size_t i = 0; i < vars.size(); ++i) tri.planes[i] = vars[i].value();
  CheckPlanes(tri.planes, config);
  return tri;
}

std::vector<const CameraView*> EncoderViewPtrs(const Scene& scene) {
  std::vector<int> idx = scene.EncoderViews();
  if (idx.empty()) {
    for (size_t i = 0; i < scene.views.size(); ++i) idx.push_back(static_cast<int>(i));
  }
  std::vector<const CameraView*> out;
  for (int i : idx) out.push_back(&scene.views[i]);
  return out;
}

FeedForwardResult EncodeScene(const BaseModel& model, const Scene& scene) {
  Tape<float> tape(false);
  const auto enc = BindEncoder(tape, model.encoder, false);
  const auto pooled = EncodeViews(enc, EncoderViewPtrs(scene));
  const VqVars<float> vq = BindVq(tape, model.vq, false, false);
  const Var<float> codes = Downsample(vq, pooled);
  FeedForwardResult out;
  out.indices = NearestCodes(codes.value(), model.vq.codebook);
  out.planes = PlanesFromIndices(model, out.indices);
  return out;
}

MultiResTriplanes PlanesFromIndices(const BaseModel& model,
                                    std::span<const int32_t> indices) {
  const VqConfig vc = model.config.vq();
  if (static_cast<int64_t>(indices.size()) != vc.NumCodes()) {
    throw ContractError("PlanesFromIndices: expected " +
                        std::to_string(vc.NumCodes()) + " indices");
  }
  Tape<float> tape(false);
  Var<float> book = tape.Leaf(&model.vq.codebook, false);
  Var<float> codes = GatherCodes(book, indices, vc.CodeShape());
  const auto planes = CodesToPlanes(model, tape, codes);
  const auto gen = BindGenerator(tape, model.generator, false);
  return PlanesFromVars(model.config.triplane, GenerateTriplanes(gen, planes));
}

}  // namespace nerfcodec
