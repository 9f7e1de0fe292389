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

// Little-endian byte serialization helpers.

#ifndef NERFCODEC_BYTES_H_
#define NERFCODEC_BYTES_H_

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nerfcodec/tensor.h"

namespace nerfcodec {

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<uint8_t>* out) : out_(out) {}

  void U8(uint8_t v) { out_->push_back(v); }
  void U16(uint16_t v) {
    for (int i = 0; i < 2; ++i) out_->push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void U32(uint32_t v) {
    for (int i = 0; i < 4; ++i) out_->push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void I32(int32_t v) { U32(static_cast<uint32_t>(v)); }
  void F32(float v) { U32(std::bit_cast<uint32_t>(v)); }
  void F32s(std::span<const float> v) {
    for (float x : v) F32(x);
  }
  void Bytes(std::span<const uint8_t> v) {
    out_->insert(out_->end(), v.begin(), v.end());
  }
  void Str(const std::string& s) {
    U32(static_cast<uint32_t>(s.size()));
    out_->insert(out_->end(), s.begin(), s.end());
  }

 private:
  std::vector<uint8_t>* out_;
};

// Reads fields in order; throws FormatError on truncation.
class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> in) : in_(in) {}

  uint8_t U8() { return Need(1)[0]; }
  uint16_t U16() {
    const uint8_t* p = Need(2);
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
  }
  uint32_t U32() {
    const uint8_t* p = Need(4);
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) |
           (static_cast<uint32_t>(p[3]) << 24);
  }
  int32_t I32() { return static_cast<int32_t>(U32()); }
  float F32() { return std::bit_cast<float>(U32()); }
  void F32s(std::span<float> out) {
    for (float& x : out) x = F32();
  }
  std::span<const uint8_t> Bytes(size_t n) { return {Need(n), n}; }
  std::string Str() {
    const uint32_t n = U32();
    const uint8_t* p = Need(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }

  size_t position() const { return pos_; }
  size_t remaining() const { return in_.size() - pos_; }

 private:
  const uint8_t* Need(size_t n) {
    if (in_.size() - pos_ < n) throw FormatError("truncated input");
    const uint8_t* p = in_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::span<const uint8_t> in_;
  size_t pos_ = 0;
};

std::vector<uint8_t> ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path, std::span<const uint8_t> bytes);

}  // namespace nerfcodec

#endif  // NERFCODEC_BYTES_H_
