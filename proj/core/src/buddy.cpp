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
#include "rowambush/buddy.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <sstream>

#include "rowambush/error.hpp"

namespace rowambush::buddy {

const char* to_string(PartitionKind k) {
  return k == PartitionKind::kernel ? "kernel" : "user";
}

const char* to_string(Owner o) {
  switch (o) {
    case Owner::page_table: return "page_table";
    case Owner::video_buffer: return "video_buffer";
    case Owner::sg_buffer: return "sg_buffer";
    case Owner::tmp_file: return "tmp_file";
    case Owner::cred: return "cred";
    case Owner::kernel_other: return "kernel_other";
    case Owner::user_other: return "user_other";
    case Owner::guard: return "guard";
  }
  return "?";
}

PartitionKind home_partition(Owner o) {
  switch (o) {
    case Owner::tmp_file:
    case Owner::cred:
    case Owner::user_other:
      return PartitionKind::user;
    default:
      return PartitionKind::kernel;
  }
}

uint64_t Block::base_addr() const { return base_pfn * kPageSize; }
uint64_t Block::bytes() const { return pages * kPageSize; }

// --- BuddyZone ---------------------------------------------------------------

BuddyZone::BuddyZone(PartitionKind kind, uint64_t begin_pfn, uint64_t end_pfn, unsigned max_order)
    : kind_(kind), begin_(begin_pfn), end_(end_pfn), max_order_(max_order), free_(max_order + 1) {
  if (end_pfn < begin_pfn) throw InvalidArgument("buddy zone: inverted range");
  if (max_order > 30) throw InvalidArgument("buddy zone: max order too large");
  release_range(begin_, end_ - begin_);
}

void BuddyZone::insert_free(uint64_t base, unsigned order) {
  free_pages_ += uint64_t{1} << order;
  while (order < max_order_) {
    const uint64_t buddy = base ^ (uint64_t{1} << order);
    auto it = free_[order].find(buddy);
    if (it == free_[order].end()) break;
    free_[order].erase(it);
    base = std::min(base, buddy);
    ++order;
  }
  free_[order].insert(base);
}

void BuddyZone::release_range(uint64_t base, uint64_t pages) {
  while (pages > 0) {
    unsigned order = std::min<unsigned>(max_order_, log2_floor(pages));
    if (base != 0) order = std::min<unsigned>(order, static_cast<unsigned>(std::countr_zero(base)));
    insert_free(base, order);
    base += uint64_t{1} << order;
    pages -= uint64_t{1} << order;
  }
}

Block BuddyZone::record(uint64_t base, uint64_t pages, Owner owner) {
  Block b{kind_, base, pages, owner};
  live_.emplace(base, b);
  return b;
}

Block BuddyZone::allocate(unsigned order, Owner owner) {
  if (order > max_order_) throw InvalidArgument("requested order exceeds the configured maximum");
  unsigned j = order;
  while (j <= max_order_ && free_[j].empty()) ++j;
  if (j > max_order_) {
    throw OutOfMemory(std::string("out of memory in ") + to_string(kind_) + " partition (order " +
                      std::to_string(order) + ")");
  }
  const uint64_t base = *free_[j].begin();
  free_[j].erase(free_[j].begin());
  free_pages_ -= uint64_t{1} << j;
  while (j > order) {
    --j;
    free_[j].insert(base + (uint64_t{1} << j));
    free_pages_ += uint64_t{1} << j;
  }
  return record(base, uint64_t{1} << order, owner);
}

Block BuddyZone::allocate_pages(uint64_t pages, Owner owner) {
  if (pages == 0) throw InvalidArgument("zero-page allocation");
  const unsigned order = log2_ceil(pages);
  Block b = allocate(order, owner);
  live_.erase(b.base_pfn);
  const uint64_t span = uint64_t{1} << order;
  if (pages < span) release_range(b.base_pfn + pages, span - pages);
  return record(b.base_pfn, pages, owner);
}

Block BuddyZone::claim(uint64_t pfn, Owner owner) {
  if (pfn < begin_ || pfn >= end_) throw InvalidArgument("claimed page outside the partition");
  for (unsigned j = 0; j <= max_order_; ++j) {
    uint64_t b = pfn & ~((uint64_t{1} << j) - 1);
    auto it = free_[j].find(b);
    if (it == free_[j].end()) continue;
    free_[j].erase(it);
    free_pages_ -= uint64_t{1} << j;
    while (j > 0) {
      --j;
      const uint64_t half = uint64_t{1} << j;
      if (pfn < b + half) {
        free_[j].insert(b + half);
      } else {
        free_[j].insert(b);
        b += half;
      }
      free_pages_ += half;
    }
    return record(pfn, 1, owner);
  }
  throw OutOfMemory("claimed page is not free");
}

void BuddyZone::free(uint64_t base_pfn) {
  auto it = live_.find(base_pfn);
  if (it == live_.end()) {
    if (base_pfn >= begin_ && base_pfn < end_ && is_free(base_pfn)) {
      throw DoubleFree("block at pfn " + std::to_string(base_pfn) + " is already free");
    }
    throw UnknownBlock("no allocation starts at pfn " + std::to_string(base_pfn));
  }
  const uint64_t pages = it->second.pages;
  live_.erase(it);
  release_range(base_pfn, pages);
}

void BuddyZone::free(const Block& block) {
  auto it = live_.find(block.base_pfn);
  if (it != live_.end() && it->second.pages != block.pages) {
    throw UnknownBlock("block size does not match the live allocation");
  }
  free(block.base_pfn);
}

std::vector<Block> BuddyZone::retag(const Block& block,
                                    const std::vector<std::pair<uint64_t, Owner>>& pieces) {
  auto it = live_.find(block.base_pfn);
  if (it == live_.end() || it->second.pages != block.pages) {
    throw UnknownBlock("retag of a block that is not live");
  }
  uint64_t total = 0;
  for (const auto& [pages, owner] : pieces) {
    if (pages == 0) throw InvalidArgument("retag piece of zero pages");
    total += pages;
  }
  if (total != block.pages) throw InvalidArgument("retag pieces must cover the block exactly");
  live_.erase(it);
  std::vector<Block> out;
  uint64_t base = block.base_pfn;
  for (const auto& [pages, owner] : pieces) {
    out.push_back(record(base, pages, owner));
    base += pages;
  }
  return out;
}

std::vector<uint64_t> BuddyZone::free_counts() const {
  std::vector<uint64_t> out(max_order_ + 1);
  for (unsigned j = 0; j <= max_order_; ++j) out[j] = free_[j].size();
  return out;
}

uint64_t BuddyZone::allocated_pages() const {
  uint64_t n = 0;
  for (const auto& [base, b] : live_) n += b.pages;
  return n;
}

uint64_t BuddyZone::pages_owned_by(Owner o) const {
  uint64_t n = 0;
  for (const auto& [base, b] : live_) {
    if (b.owner == o) n += b.pages;
  }
  return n;
}

bool BuddyZone::is_free(uint64_t pfn) const {
  for (unsigned j = 0; j <= max_order_; ++j) {
    if (free_[j].count(pfn & ~((uint64_t{1} << j) - 1))) return true;
  }
  return false;
}

std::optional<Block> BuddyZone::allocation_at(uint64_t pfn) const {
  auto it = live_.upper_bound(pfn);
  if (it == live_.begin()) return std::nullopt;
  --it;
  if (it->second.contains_pfn(pfn)) return it->second;
  return std::nullopt;
}

// --- snapshots ---------------------------------------------------------------

uint64_t BuddyInfoSnapshot::bytes_below(PartitionKind k, unsigned order) const {
  const auto& counts = of(k);
  uint64_t bytes = 0;
  for (unsigned j = 0; j < order && j < counts.size(); ++j) {
    bytes += counts[j] * (uint64_t{1} << j) * kPageSize;
  }
  return bytes;
}

std::string format_buddyinfo(const BuddyInfoSnapshot& s) {
  std::ostringstream os;
  auto line = [&os](const char* name, const std::vector<uint64_t>& counts) {
    os << name;
    for (uint64_t c : counts) os << ' ' << c;
    os << '\n';
  };
  line("kernel", s.kernel);
  line("user", s.user);
  return os.str();
}

BuddyInfoSnapshot parse_buddyinfo(const std::string& text) {
  BuddyInfoSnapshot s;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string name;
    ls >> name;
    std::vector<uint64_t> counts;
    uint64_t c;
    while (ls >> c) counts.push_back(c);
    if (name == "kernel") {
      s.kernel = std::move(counts);
    } else if (name == "user") {
      s.user = std::move(counts);
    } else {
      throw ConfigError("buddyinfo: unknown partition '" + name + "'");
    }
  }
  return s;
}

// --- PhysicalAllocator -------------------------------------------------------

namespace {

BuddyZone make_kernel_zone(const dram::DramGeometry& g, uint64_t kernel_bytes, unsigned max_order) {
  const uint64_t rs = g.rows_size_per_row_index();
  if (kernel_bytes == 0 || kernel_bytes % rs != 0) {
    throw InvalidArgument("kernel partition must be a positive multiple of the row-index size");
  }
  if (kernel_bytes + 2 * rs > g.capacity()) {
    throw InvalidArgument("kernel partition leaves no room for the user partition");
  }
  return BuddyZone(PartitionKind::kernel, 0, kernel_bytes / kPageSize, max_order);
}

}  // namespace

PhysicalAllocator::PhysicalAllocator(const dram::DramGeometry& geometry, uint64_t kernel_bytes,
                                     unsigned max_order)
    : geometry_(geometry),
      kernel_(make_kernel_zone(geometry, kernel_bytes, max_order)),
      user_(PartitionKind::user, (kernel_bytes + geometry.rows_size_per_row_index()) / kPageSize,
            geometry.capacity() / kPageSize, max_order) {}

IsolatedBuffer PhysicalAllocator::allocate_isolated_buffer(PartitionKind p, uint64_t bytes,
                                                           Owner owner) {
  if (bytes == 0) throw InvalidArgument("isolated buffer of zero bytes");
  const uint64_t rs_pages = geometry_.rows_size_per_row_index() / kPageSize;
  const uint64_t pages = div_ceil(bytes, kPageSize);
  const uint64_t span = (div_ceil(pages, rs_pages) + 2) * rs_pages;
  if (log2_ceil(span) > zone(p).max_order()) {
    throw InvalidArgument("isolated buffer exceeds the largest contiguous block");
  }
  Block whole;
  try {
    whole = zone(p).allocate_pages(span, Owner::guard);
  } catch (const OutOfMemory&) {
    throw OutOfMemory("cannot place the buffer with guard rows");
  }
  auto parts = zone(p).retag(whole, {{rs_pages, Owner::guard},
                                     {pages, owner},
                                     {span - rs_pages - pages, Owner::guard}});
  IsolatedBuffer out;
  out.buffer = parts[1];
  out.guards = {parts[0], parts[2]};
  out.reserved_guard_bytes = (span - pages) * kPageSize;
  out.guard_row_cost_bytes = 2 * geometry_.row_size();
  return out;
}

BuddyInfoSnapshot PhysicalAllocator::buddy_info() const {
  return BuddyInfoSnapshot{kernel_.free_counts(), user_.free_counts()};
}

std::optional<PartitionKind> PhysicalAllocator::partition_of(uint64_t pfn) const {
  if (pfn >= kernel_.begin_pfn() && pfn < kernel_.end_pfn()) return PartitionKind::kernel;
  if (pfn >= user_.begin_pfn() && pfn < user_.end_pfn()) return PartitionKind::user;
  return std::nullopt;
}

std::optional<Block> PhysicalAllocator::allocation_at(uint64_t pfn) const {
  auto p = partition_of(pfn);
  if (!p) return std::nullopt;
  return zone(*p).allocation_at(pfn);
}

uint64_t PhysicalAllocator::guard_pages() const {
  return kernel_.pages_owned_by(Owner::guard) + user_.pages_owned_by(Owner::guard);
}

}  // namespace rowambush::buddy
