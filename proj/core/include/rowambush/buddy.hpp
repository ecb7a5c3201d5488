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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rowambush/dram.hpp"
#include "rowambush/units.hpp"

namespace rowambush::buddy {

enum class PartitionKind : uint8_t { kernel, user };

enum class Owner : uint8_t {
  page_table,
  video_buffer,
  sg_buffer,
  tmp_file,
  cred,
  kernel_other,
  user_other,
  guard,
};

const char* to_string(PartitionKind k);
const char* to_string(Owner o);
/// Partition an owner tag belongs to under physical kernel isolation.
PartitionKind home_partition(Owner o);

inline constexpr unsigned kDefaultMaxOrder = 10;

/// A live allocation: pages physically contiguous pages starting at base_pfn.
/// Buddy-sized blocks have pages == 2^order; exact-size allocations need not.
struct Block {
  PartitionKind partition = PartitionKind::kernel;
  uint64_t base_pfn = 0;
  uint64_t pages = 0;
  Owner owner = Owner::kernel_other;

  uint64_t base_addr() const;
  uint64_t bytes() const;
  uint64_t end_pfn() const { return base_pfn + pages; }
  bool contains_pfn(uint64_t pfn) const { return pfn >= base_pfn && pfn < end_pfn(); }
};

/// Free-list allocator over one contiguous page range [begin_pfn, end_pfn).
///
/// Splits the smallest sufficient free block, always keeping the lower half,
/// and takes the lowest-addressed block within an order. Frees coalesce
/// eagerly, so the free lists only ever hold maximal buddy blocks.
class BuddyZone {
 public:
  BuddyZone(PartitionKind kind, uint64_t begin_pfn, uint64_t end_pfn,
            unsigned max_order = kDefaultMaxOrder);

  PartitionKind kind() const { return kind_; }
  uint64_t begin_pfn() const { return begin_; }
  uint64_t end_pfn() const { return end_; }
  unsigned max_order() const { return max_order_; }
  uint64_t capacity_pages() const { return end_ - begin_; }

  Block allocate(unsigned order, Owner owner);
  /// Allocates exactly pages pages: a block of the covering order with the
  /// unused tail handed back to the free lists.
  Block allocate_pages(uint64_t pages, Owner owner);
  /// Takes the single free page pfn out of whichever free block holds it.
  Block claim(uint64_t pfn, Owner owner);
  void free(const Block& block);
  void free(uint64_t base_pfn);

  /// Replaces one live allocation with consecutive sub-allocations that cover
  /// it exactly (used to carve guard regions out of a reservation).
  std::vector<Block> retag(const Block& block,
                           const std::vector<std::pair<uint64_t, Owner>>& pieces);

  std::vector<uint64_t> free_counts() const;
  uint64_t free_pages() const { return free_pages_; }
  uint64_t allocated_pages() const;
  uint64_t pages_owned_by(Owner o) const;
  bool is_free(uint64_t pfn) const;
  std::optional<Block> allocation_at(uint64_t pfn) const;
  const std::set<uint64_t>& free_list(unsigned order) const { return free_.at(order); }
  const std::map<uint64_t, Block>& allocations() const { return live_; }

 private:
  void insert_free(uint64_t base, unsigned order);
  void release_range(uint64_t base, uint64_t pages);
  Block record(uint64_t base, uint64_t pages, Owner owner);

  PartitionKind kind_;
  uint64_t begin_, end_;
  unsigned max_order_;
  std::vector<std::set<uint64_t>> free_;
  std::map<uint64_t, Block> live_;
  uint64_t free_pages_ = 0;
};

/// Free-block counts per order for each partition.
struct BuddyInfoSnapshot {
  std::vector<uint64_t> kernel;
  std::vector<uint64_t> user;

  const std::vector<uint64_t>& of(PartitionKind k) const {
    return k == PartitionKind::kernel ? kernel : user;
  }
  /// Free bytes held in blocks strictly below the given order.
  uint64_t bytes_below(PartitionKind k, unsigned order) const;
};

/// /proc/buddyinfo-shaped text: one line per partition, the partition name
/// followed by free counts in ascending order.
std::string format_buddyinfo(const BuddyInfoSnapshot& s);
BuddyInfoSnapshot parse_buddyinfo(const std::string& text);

struct IsolatedBuffer {
  Block buffer;
  std::vector<Block> guards;
  /// Bytes withheld from every other allocation (flank row indices plus the
  /// slack left in the buffer's final row index).
  uint64_t reserved_guard_bytes = 0;
  /// One guard row per side of the buffer in a single bank: 2 x row size.
  uint64_t guard_row_cost_bytes = 0;
};

/// Kernel and user partitions with at least one unused row index between them.
///
/// Layout: kernel occupies [0, kernel_bytes), one row index is left unused,
/// and the user partition runs from there to the end of DRAM.
class PhysicalAllocator {
 public:
  PhysicalAllocator(const dram::DramGeometry& geometry, uint64_t kernel_bytes,
                    unsigned max_order = kDefaultMaxOrder);

  const dram::DramGeometry& geometry() const { return geometry_; }
  BuddyZone& zone(PartitionKind k) { return k == PartitionKind::kernel ? kernel_ : user_; }
  const BuddyZone& zone(PartitionKind k) const {
    return k == PartitionKind::kernel ? kernel_ : user_;
  }

  Block allocate(PartitionKind p, unsigned order, Owner owner) {
    return zone(p).allocate(order, owner);
  }
  Block allocate_pages(PartitionKind p, uint64_t pages, Owner owner) {
    return zone(p).allocate_pages(pages, owner);
  }
  Block claim(PartitionKind p, uint64_t pfn, Owner owner) { return zone(p).claim(pfn, owner); }
  void free(const Block& b) { zone(b.partition).free(b); }

  /// Physically contiguous buffer whose row indices are flanked by one
  /// reserved row index on each side. The final row index is reserved whole,
  /// so no foreign page shares a DRAM row with the buffer.
  IsolatedBuffer allocate_isolated_buffer(PartitionKind p, uint64_t bytes, Owner owner);

  BuddyInfoSnapshot buddy_info() const;

  std::optional<PartitionKind> partition_of(uint64_t pfn) const;
  std::optional<Block> allocation_at(uint64_t pfn) const;
  uint64_t total_pages() const { return geometry_.capacity() / kPageSize; }
  uint64_t guard_pages() const;

 private:
  dram::DramGeometry geometry_;
  BuddyZone kernel_;
  BuddyZone user_;
};

}  // namespace rowambush::buddy
