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

#ifndef NERFCODEC_PARALLEL_H_
#define NERFCODEC_PARALLEL_H_

#include <cstdint>
#include <functional>

namespace nerfcodec {

// Worker count from CODEC_THREADS (default 1). Values < 1 are treated as 1.
int WorkerCount();

// Runs fn(i) for i in [0, n) on WorkerCount() threads using a static
// contiguous partition. Callers must write only to disjoint per-index
// outputs, so results do not depend on the thread count.
void ParallelFor(int64_t n, const std::function<void(int64_t)>& fn);

}  // namespace nerfcodec

#endif  // NERFCODEC_PARALLEL_H_
