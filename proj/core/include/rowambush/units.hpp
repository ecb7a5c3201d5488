// Copyright 2026 The rowambush Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>

namespace rowambush {

inline constexpr uint64_t KiB = 1024;
inline constexpr uint64_t MiB = 1024 * KiB;
inline constexpr uint64_t GiB = 1024 * MiB;

inline constexpr uint64_t kPageSize = 4 * KiB;
inline constexpr unsigned kPageShift = 12;
inline constexpr unsigned kPtesPerPage = 512;
// Virtual span covered by one last-level page-table page.
inline constexpr uint64_t kPtSpan = kPtesPerPage * kPageSize;

constexpr bool is_pow2(uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

constexpr unsigned log2_floor(uint64_t v) {
  unsigned r = 0;
  while (v >>= 1) ++r;
  return r;
}

constexpr unsigned log2_ceil(uint64_t v) {
  return v <= 1 ? 0 : log2_floor(v - 1) + 1;
}

constexpr uint64_t div_ceil(uint64_t a, uint64_t b) { return (a + b - 1) / b; }

}  // namespace rowambush
