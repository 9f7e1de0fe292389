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

// Counter-based random streams. A stream key is derived from a seed and a
// pair of integers (for example an iteration and a pixel index), so values do
// not depend on evaluation order or thread count.

#ifndef NERFCODEC_RANDOM_H_
#define NERFCODEC_RANDOM_H_

#include <cstdint>

namespace nerfcodec {

inline uint64_t SplitMix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline uint64_t StreamKey(uint64_t seed, uint64_t a, uint64_t b = 0) {
  return SplitMix64(SplitMix64(SplitMix64(seed) ^ a) ^ b);
}

// Uniform double in [0, 1) for position `counter` of stream `key`.
inline double UniformAt(uint64_t key, uint64_t counter) {
  return static_cast<double>(SplitMix64(key + counter * 0xD1B54A32D192ED03ULL) >>
                             11) *
         0x1.0p-53;
}

}  // namespace nerfcodec

#endif  // NERFCODEC_RANDOM_H_
