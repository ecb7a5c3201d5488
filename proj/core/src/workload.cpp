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
#include "rowambush/workload.hpp"

#include <algorithm>
#include <unordered_map>

#include "rowambush/error.hpp"

namespace rowambush::buddy {

namespace {

uint64_t free_under_group_rule(PhysicalAllocator& alloc, Preload& preload, uint64_t pages,
                               unsigned target_order, Rng& rng) {
  std::unordered_map<uint64_t, uint32_t> live_in_group;
  for (uint64_t pfn : preload.held) ++live_in_group[pfn >> target_order];

  std::vector<uint64_t> order = preload.held;
  for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  std::vector<uint64_t> released;
  for (uint64_t pfn : order) {
    if (released.size() == pages) break;
    uint32_t& live = live_in_group[pfn >> target_order];
    if (live <= 1) continue;
    --live;
    alloc.zone(PartitionKind::kernel).free(pfn);
    released.push_back(pfn);
  }
  std::sort(released.begin(), released.end());
  std::vector<uint64_t> kept;
  kept.reserve(preload.held.size() - released.size());
  std::set_difference(preload.held.begin(), preload.held.end(), released.begin(), released.end(),
                      std::back_inserter(kept));
  preload.held = std::move(kept);
  preload.freed_pages += released.size();
  return released.size();
}

}  // namespace

Preload preload_kernel(PhysicalAllocator& alloc, uint64_t residue_bytes, double free_fraction,
                       unsigned target_order, Rng& rng) {
  Preload p;
  if (residue_bytes == 0) return p;
  if (!(free_fraction > 0.0 && free_fraction < 1.0)) {
    throw InvalidArgument("preload free fraction must lie in (0, 1)");
  }
  auto& zone = alloc.zone(PartitionKind::kernel);
  const uint64_t block = uint64_t{1} << zone.max_order();
  const uint64_t residue_pages = div_ceil(residue_bytes, kPageSize);
  p.span_pages = div_ceil(static_cast<uint64_t>(static_cast<double>(residue_pages) / free_fraction), block) * block;
  if (p.span_pages > zone.free_pages()) throw InvalidArgument("preload does not fit the kernel partition");
  p.held.reserve(p.span_pages);
  for (uint64_t i = 0; i < p.span_pages; ++i) {
    p.held.push_back(zone.allocate(0, Owner::kernel_other).base_pfn);
  }
  std::sort(p.held.begin(), p.held.end());
  if (free_under_group_rule(alloc, p, residue_pages, target_order, rng) != residue_pages) {
    throw InvalidArgument("preload residue too large for its span");
  }
  return p;
}

uint64_t release_fresh_small_blocks(PhysicalAllocator& alloc, Preload& preload, uint64_t bytes,
                                    unsigned target_order, Rng& rng) {
  return free_under_group_rule(alloc, preload, bytes / kPageSize, target_order, rng) * kPageSize;
}

}  // namespace rowambush::buddy
