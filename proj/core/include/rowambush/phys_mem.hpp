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

#include <array>
#include <cstdint>
#include <deque>
#include <vector>

#include "rowambush/dram.hpp"
#include "rowambush/units.hpp"

namespace rowambush {

using PageWords = std::array<uint64_t, kPtesPerPage>;

/// Byte contents of simulated physical memory. Pages are materialized on first
/// write; untouched pages read as zero.
class PhysicalMemory final : public dram::CellStore {
 public:
  explicit PhysicalMemory(uint64_t bytes);

  uint64_t bytes() const { return slot_.size() * kPageSize; }
  uint64_t pages() const { return slot_.size(); }
  bool backed(uint64_t pfn) const { return pfn < slot_.size() && slot_[pfn] != 0; }
  uint64_t backed_pages() const { return store_.size(); }

  /// addr must be 8-byte aligned.
  uint64_t read_u64(uint64_t addr) const;
  void write_u64(uint64_t addr, uint64_t value);
  /// addr must be 4-byte aligned.
  uint32_t read_u32(uint64_t addr) const;
  void write_u32(uint64_t addr, uint32_t value);

  /// Words of a backed page; nullptr when the page was never written.
  const PageWords* page(uint64_t pfn) const;
  /// Backs the page if needed and returns its words for bulk writes.
  PageWords& page_for_write(uint64_t pfn);

  bool get_bit(uint64_t addr, unsigned bit) const override;
  void set_bit(uint64_t addr, unsigned bit, bool value) override;

 private:
  void check(uint64_t addr, uint64_t align) const;
  PageWords& materialize(uint64_t pfn);

  std::vector<uint32_t> slot_;  // 0 = not backed, else index + 1 into store_
  std::deque<PageWords> store_;
};

}  // namespace rowambush
