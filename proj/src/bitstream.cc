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

#include <zlib.h>

#include <cmath>
#include <cstdio>

#include "nerfcodec/bytes.h"

namespace nerfcodec {
namespace {

constexpr uint8_t kMagic[4] = {'C', 'N', 'R', 'F'};

struct Header {
  FinetuneMode mode = FinetuneMode::kWoFt;
  uint16_t channels = 0;
  uint16_t res[3] = {0, 0, 0};
  uint16_t code_dim = 0;
  uint16_t code_res = 0;
  uint32_t codebook_size = 0;
  uint16_t rank = 0;
  uint16_t lora_rank = 0;
  uint16_t profile = 0;
  std::vector<IntBounds> bounds;
  std::vector<float> density;
  uint32_t lengths[4] = {0, 0, 0, 0};
  uint32_t crc = 0;
  size_t size = 0;  // header bytes
};

uint16_t Narrow16(int64_t v, const char* what) {
  if (v < 0 || v > 0xFFFF) {
    throw ContractError(std::string("bitstream: ") + what + " does not fit u16");
  }
  return static_cast<uint16_t>(v);
}

Header ReadHeader(ByteReader& r) {
  Header h;
  const auto magic = r.Bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic)) {
    throw FormatError("bitstream: bad magic");
  }
  const uint8_t version = r.U8();
  if (version != kBitstreamVersion) {
    throw FormatError("bitstream: unsupported version " + std::to_string(version));
  }
  const uint16_t mode = r.U16();
  if (mode > 3) throw FormatError("bitstream: unknown mode");
  h.mode = static_cast<FinetuneMode>(mode);
  h.channels = r.U16();
  for (auto& v : h.res) v = r.U16();
  h.code_dim = r.U16();
  h.code_res = r.U16();
  h.codebook_size = r.U32();
  h.rank = r.U16();
  h.lora_rank = r.U16();
  h.profile = r.U16();
  const uint16_t n_streams = r.U16();
  for (int i = 0; i < n_streams; ++i) {
    IntBounds b;
    b.min = r.I32();
    b.max = r.I32();
    if (b.min > b.max) throw FormatError("bitstream: inverted stream bounds");
    h.bounds.push_back(b);
  }
  h.density.resize(r.U16());
  r.F32s(h.density);
  for (auto& len : h.lengths) len = r.U32();
  h.crc = r.U32();
  h.size = r.position();
  return h;
}

void AppendTensor(const Tensor<float>& t, ByteWriter& w) { w.F32s(t.data); }

void ReadTensor(ByteReader& r, Tensor<float>* t) { r.F32s(t->data); }

void CheckLoraShapes(const LoraAdapter& lora, const MlpConfig& mlp, int rank) {
  if (lora.rank != rank || static_cast<int>(lora.layers.size()) != mlp.NumLayers()) {
    throw ContractError("bitstream: adapter does not match the config");
  }
  for (int i = 0; i < mlp.NumLayers(); ++i) {
    const auto [out, in] = mlp.LayerShape(i);
    if (lora.layers[i].a.shape != Shape{out, rank} ||
        lora.layers[i].b.shape != Shape{rank, in}) {
      throw ContractError("bitstream: adapter layer shape mismatch");
    }
  }
}

void CheckMlpShapes(const RadianceMlp& mlp, const MlpConfig& cfg) {
  if (static_cast<int>(mlp.layers.size()) != cfg.NumLayers()) {
    throw ContractError("bitstream: MLP does not match the config");
  }
  for (int i = 0; i < cfg.NumLayers(); ++i) {
    const auto [out, in] = cfg.LayerShape(i);
    if (mlp.layers[i].weight.shape != Shape{out, in} ||
        mlp.layers[i].bias.shape != Shape{out}) {
      throw ContractError("bitstream: MLP layer shape mismatch");
    }
  }
}

LoraAdapter EmptyLora(const MlpConfig& mlp, int rank) {
  LoraAdapter lora;
  lora.rank = rank;
  for (int i = 0; i < mlp.NumLayers(); ++i) {
    const auto [out, in] = mlp.LayerShape(i);
    lora.layers.push_back({Tensor<float>({out, rank}), Tensor<float>({rank, in})});
  }
  return lora;
}

DeltaFactors EmptyDelta(const ModelConfig& c) {
  DeltaFactors d;
  d.config = c.triplane;
  d.rank = c.delta_rank;
  for (int k = 0; k < kNumPlanes; ++k) {
    for (int s = 0; s < kNumScales; ++s) {
      const int v = c.triplane.resolutions[s];
      d.m[PlaneIndex(k, s)] = Tensor<float>({c.delta_rank, v, v});
    }
  }
  for (int s = 0; s < kNumScales; ++s) {
    d.v[s] = Tensor<float>({c.delta_rank, c.triplane.channels});
  }
  return d;
}

void CheckDelta(const DeltaFactors& d, const ModelConfig& c) {
  const DeltaFactors ref = EmptyDelta(c);
  for (size_t i = 0; i < d.m.size(); ++i) {
    if (d.m[i].shape != ref.m[i].shape) throw ContractError("bitstream: M shape mismatch");
  }
  for (size_t s = 0; s < d.v.size(); ++s) {
    if (d.v[s].shape != ref.v[s].shape) throw ContractError("bitstream: v shape mismatch");
  }
}

void ExpectConsumed(const ByteReader& r, const char* section) {
  if (r.remaining() != 0) {
    throw FormatError(std::string("bitstream: section ") + section +
                      " length does not match its content");
  }
}

}  // namespace

int NumStreams(const ModelConfig& config) {
  return kNumPlanes * kNumScales * config.delta_rank;
}

std::span<const float> StreamValues(const DeltaFactors& delta, int stream) {
  const Tensor<float>& m = delta.m.at(stream / delta.rank);
  const int64_t n = m.size() / delta.rank;
  return std::span<const float>(m.data).subspan((stream % delta.rank) * n, n);
}

std::vector<uint8_t> PackBits(std::span<const int32_t> values, int bits) {
  if (bits < 1 || bits > 31) throw ContractError("PackBits: bad width");
  std::vector<uint8_t> out((values.size() * bits + 7) / 8, 0);
  uint64_t pos = 0;
  for (int32_t v : values) {
    if (v < 0 || (static_cast<uint64_t>(v) >> bits) != 0) {
      throw ContractError("PackBits: value does not fit");
    }
    for (int b = bits - 1; b >= 0; --b, ++pos) {
      if ((v >> b) & 1) out[pos / 8] |= static_cast<uint8_t>(0x80u >> (pos % 8));
    }
  }
  return out;
}

std::vector<int32_t> UnpackBits(std::span<const uint8_t> bytes, int bits,
                                int64_t count) {
  if (bits < 1 || bits > 31) throw ContractError("UnpackBits: bad width");
  if (static_cast<int64_t>(bytes.size()) != (count * bits + 7) / 8) {
    throw FormatError("bitstream: index section has the wrong length");
  }
  std::vector<int32_t> out(count, 0);
  uint64_t pos = 0;
  for (auto& v : out) {
    for (int b = 0; b < bits; ++b, ++pos) {
      v = (v << 1) | ((bytes[pos / 8] >> (7 - pos % 8)) & 1);
    }
  }
  return out;
}

uint32_t Crc32(std::span<const uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  return static_cast<uint32_t>(
      crc32(crc, bytes.data(), static_cast<uInt>(bytes.size())));
}

std::vector<uint8_t> PackBitstream(const CodecPayload& p) {
  const ModelConfig& c = p.config;
  c.Validate();
  const VqConfig vc = c.vq();
  if (static_cast<int64_t>(p.indices.size()) != vc.NumCodes()) {
    throw ContractError("bitstream: expected " + std::to_string(vc.NumCodes()) +
                        " indices");
  }
  for (int32_t i : p.indices) {
    if (i < 0 || i >= c.codebook_size) throw ContractError("bitstream: index out of range");
  }
  const MlpConfig mlp = c.mlp();
  std::vector<uint8_t> sec[4];
  sec[0] = PackBits(p.indices, c.IndexBits());
  std::vector<IntBounds> bounds;
  std::vector<float> density;

  if (p.mode == FinetuneMode::kPeft || p.mode == FinetuneMode::kPeftPlus) {
    CheckDelta(p.delta, c);
    CheckLoraShapes(p.coarse_lora, mlp, c.lora_rank);
    CheckLoraShapes(p.fine_lora, mlp, c.lora_rank);
    ByteWriter b(&sec[1]);
    if (p.mode == FinetuneMode::kPeft) {
      for (const auto& m : p.delta.m) AppendTensor(m, b);
    } else {
      const int n = NumStreams(c);
      if (static_cast<int>(p.density.size()) != n) {
        throw ContractError("bitstream: peft++ needs one density per stream");
      }
      for (int s = 0; s < n; ++s) {
        const auto values = StreamValues(p.delta, s);
        IntBounds bnd;
        const auto symbols = QuantizeRound(values, &bnd);
        for (size_t i = 0; i < symbols.size(); ++i) {
          if (static_cast<float>(symbols[i]) != values[i]) {
            throw ContractError("bitstream: peft++ matrices must be integer-valued");
          }
        }
        const auto coded = EncodeStream(symbols, p.density[s], bnd);
        b.U32(static_cast<uint32_t>(coded.size()));
        b.Bytes(coded);
        bounds.push_back(bnd);
        density.insert(density.end(), p.density[s].begin(), p.density[s].end());
      }
    }
    ByteWriter v(&sec[2]);
    for (const auto& t : p.delta.v) AppendTensor(t, v);
    ByteWriter d(&sec[3]);
    for (const LoraAdapter* l : {&p.coarse_lora, &p.fine_lora}) {
      for (const auto& layer : l->layers) {
        AppendTensor(layer.a, d);
        AppendTensor(layer.b, d);
      }
    }
  } else if (p.mode == FinetuneMode::kFullFt) {
    CheckPlanes(p.planes.planes, c.triplane);
    CheckMlpShapes(p.coarse, mlp);
    CheckMlpShapes(p.fine, mlp);
    ByteWriter b(&sec[1]);
    for (const auto& plane : p.planes.planes) AppendTensor(plane, b);
    ByteWriter d(&sec[3]);
    for (const RadianceMlp* m : {&p.coarse, &p.fine}) {
      for (const auto& layer : m->layers) {
        AppendTensor(layer.weight, d);
        AppendTensor(layer.bias, d);
      }
    }
  }

  std::vector<uint8_t> payload;
  for (const auto& s : sec) payload.insert(payload.end(), s.begin(), s.end());

  std::vector<uint8_t> out;
  ByteWriter w(&out);
  w.Bytes(kMagic);
  w.U8(kBitstreamVersion);
  w.U16(static_cast<uint16_t>(p.mode));
  w.U16(Narrow16(c.triplane.channels, "C"));
  for (int v : c.triplane.resolutions) w.U16(Narrow16(v, "V"));
  w.U16(Narrow16(c.code_dim, "C'"));
  w.U16(Narrow16(vc.code_resolution(), "V'"));
  w.U32(static_cast<uint32_t>(c.codebook_size));
  w.U16(Narrow16(c.delta_rank, "R"));
  w.U16(Narrow16(c.lora_rank, "adapter rank"));
  w.U16(static_cast<uint16_t>(c.profile));
  w.U16(Narrow16(static_cast<int64_t>(bounds.size()), "stream count"));
  for (const auto& b : bounds) {
    w.I32(b.min);
    w.I32(b.max);
  }
  w.U16(Narrow16(static_cast<int64_t>(density.size()), "density size"));
  w.F32s(density);
  for (const auto& s : sec) w.U32(static_cast<uint32_t>(s.size()));
  w.U32(Crc32(payload));
  w.Bytes(payload);
  return out;
}

CodecPayload UnpackBitstream(std::span<const uint8_t> bytes,
                             const ModelConfig& model_config) {
  ByteReader r(bytes);
  const Header h = ReadHeader(r);
  const ModelConfig& c = model_config;
  const VqConfig vc = c.vq();
  if (h.channels != c.triplane.channels || h.res[0] != c.triplane.resolutions[0] ||
      h.res[1] != c.triplane.resolutions[1] || h.res[2] != c.triplane.resolutions[2] ||
      h.code_dim != c.code_dim || h.code_res != vc.code_resolution() ||
      h.codebook_size != static_cast<uint32_t>(c.codebook_size) ||
      h.rank != c.delta_rank || h.lora_rank != c.lora_rank ||
      h.profile != static_cast<uint16_t>(c.profile)) {
    throw FormatError("bitstream: header does not match the shared model");
  }
  uint64_t total = 0;
  for (uint32_t len : h.lengths) total += len;
  if (r.remaining() != total) {
    throw FormatError(r.remaining() < total ? "bitstream: truncated payload"
                                            : "bitstream: trailing bytes");
  }
  const auto payload = r.Bytes(total);
  if (Crc32(payload) != h.crc) throw FormatError("bitstream: checksum mismatch");
  std::span<const uint8_t> sec[4];
  size_t offset = 0;
  for (int i = 0; i < 4; ++i) {
    sec[i] = payload.subspan(offset, h.lengths[i]);
    offset += h.lengths[i];
  }

  CodecPayload p;
  p.mode = h.mode;
  p.config = c;
  p.indices = UnpackBits(sec[0], c.IndexBits(), vc.NumCodes());
  for (int32_t i : p.indices) {
    if (i >= c.codebook_size) throw FormatError("bitstream: index out of range");
  }
  const MlpConfig mlp = c.mlp();
  const bool peft = h.mode == FinetuneMode::kPeft || h.mode == FinetuneMode::kPeftPlus;
  const int n_streams = h.mode == FinetuneMode::kPeftPlus ? NumStreams(c) : 0;
  if (static_cast<int>(h.bounds.size()) != n_streams ||
      h.density.size() != static_cast<size_t>(n_streams) * kDensityParams) {
    throw FormatError("bitstream: stream table does not match the mode");
  }
  if (h.mode == FinetuneMode::kWoFt) {
    if (h.lengths[1] || h.lengths[2] || h.lengths[3]) {
      throw FormatError("bitstream: wo-ft carries section (a) only");
    }
    return p;
  }
  if (peft) {
    p.delta = EmptyDelta(c);
    ByteReader b(sec[1]);
    if (h.mode == FinetuneMode::kPeft) {
      for (auto& m : p.delta.m) ReadTensor(b, &m);
    } else {
      for (int s = 0; s < n_streams; ++s) {
        const uint32_t len = b.U32();
        const auto coded = b.Bytes(len);
        std::vector<float> params(h.density.begin() + s * kDensityParams,
                                  h.density.begin() + (s + 1) * kDensityParams);
        Tensor<float>& m = p.delta.m[s / c.delta_rank];
        const int64_t n = m.size() / c.delta_rank;
        std::vector<int32_t> symbols;
        try {
          symbols = DecodeStream(coded, params, h.bounds[s], n);
        } catch (const ContractError& e) {
          throw FormatError(std::string("bitstream: ") + e.what());
        }
        for (int64_t i = 0; i < n; ++i) {
          m[(s % c.delta_rank) * n + i] = static_cast<float>(symbols[i]);
        }
        p.density.push_back(std::move(params));
      }
      p.bounds = h.bounds;
    }
    ExpectConsumed(b, "(b)");
    ByteReader v(sec[2]);
    for (auto& t : p.delta.v) ReadTensor(v, &t);
    ExpectConsumed(v, "(c)");
    p.coarse_lora = EmptyLora(mlp, c.lora_rank);
    p.fine_lora = EmptyLora(mlp, c.lora_rank);
    ByteReader d(sec[3]);
    for (LoraAdapter* l : {&p.coarse_lora, &p.fine_lora}) {
      for (auto& layer : l->layers) {
        ReadTensor(d, &layer.a);
        ReadTensor(d, &layer.b);
      }
    }
    ExpectConsumed(d, "(d)");
    return p;
  }
  // full-ft
  p.planes = MultiResTriplanes::Zeros(c.triplane);
  ByteReader b(sec[1]);
  for (auto& plane : p.planes.planes) ReadTensor(b, &plane);
  ExpectConsumed(b, "(b)");
  if (h.lengths[2] != 0) throw FormatError("bitstream: full-ft has no section (c)");
  p.coarse = RadianceMlp::Zeros(mlp);
  p.fine = RadianceMlp::Zeros(mlp);
  ByteReader d(sec[3]);
  for (RadianceMlp* m : {&p.coarse, &p.fine}) {
    for (auto& layer : m->layers) {
      ReadTensor(d, &layer.weight);
      ReadTensor(d, &layer.bias);
    }
  }
  ExpectConsumed(d, "(d)");
  return p;
}

SizeReport ReportSizes(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  const Header h = ReadHeader(r);
  SizeReport rep;
  for (int i = 0; i < 4; ++i) rep.section[i] = h.lengths[i];
  const int64_t tables = 8 * static_cast<int64_t>(h.bounds.size()) +
                         4 * static_cast<int64_t>(h.density.size());
  rep.codes = static_cast<int64_t>(h.size) - tables + rep.section[0];
  rep.feature = tables + rep.section[1] + rep.section[2];
  rep.mlp = rep.section[3];
  rep.total = static_cast<int64_t>(bytes.size());
  return rep;
}

std::string SizeTableMarkdown(const std::vector<std::string>& labels,
                              const std::vector<SizeReport>& reports) {
  auto mb = [](int64_t b) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", static_cast<double>(b) / 1e6);
    return std::string(buf);
  };
  std::string out = "| component |";
  for (const auto& l : labels) out += " " + l + " |";
  out += "\n|---|";
  for (size_t i = 0; i < labels.size(); ++i) out += "---|";
  out += "\n";
  const char* rows[] = {"codes (indices)", "feature (M payload)", "MLP (adapters)",
                        "total"};
  for (int row = 0; row < 4; ++row) {
    out += std::string("| ") + rows[row] + " |";
    for (const auto& rep : reports) {
      const int64_t v = row == 0   ? rep.codes
                        : row == 1 ? rep.feature
                        : row == 2 ? rep.mlp
                                   : rep.total;
      out += " " + mb(v) + " |";
    }
    out += "\n";
  }
  return out;
}

}  // namespace nerfcodec
