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
#include <vector>

#include "rowambush/buddy.hpp"
#include "rowambush/rng.hpp"

namespace rowambush::buddy {

/// Kernel pages held by the simulated background workload.
struct Preload {
  uint64_t span_pages = 0;
  uint64_t freed_pages = 0;
  std::vector<uint64_t> held;  // pfns still allocated, ascending
};

/// Fills the bottom of the kernel partition page by page, then frees a seeded
/// random residue_bytes of it. At least one page of every target-order group
/// stays allocated, so the whole residue remains in blocks below target_order.
/// The span is residue / free_fraction rounded up to the largest block.
Preload preload_kernel(PhysicalAllocator& alloc, uint64_t residue_bytes, double free_fraction,
                       unsigned target_order, Rng& rng);

/// Frees up to bytes more of the held pages under the same group rule,
/// producing fresh small blocks. Returns the bytes actually freed.
uint64_t release_fresh_small_blocks(PhysicalAllocator& alloc, Preload& preload, uint64_t bytes,
                                    unsigned target_order, Rng& rng);

}  // namespace rowambush::buddy
