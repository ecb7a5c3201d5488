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
#include "rowambush/phys_mem.hpp"

#include <string>

#include "rowambush/error.hpp"

namespace rowambush {

PhysicalMemory::PhysicalMemory(uint64_t bytes) : slot_(bytes / kPageSize, 0) {
  if (bytes == 0 || bytes % kPageSize != 0) {
    throw InvalidArgument("physical memory size must be a positive multiple of the page size");
  }
}

void PhysicalMemory::check(uint64_t addr, uint64_t align) const {
  if (addr >= bytes()) throw AddressOutOfRange("physical address " + std::to_string(addr) + " out of range");
  if (addr % align != 0) throw InvalidArgument("misaligned physical access");
}

PageWords& PhysicalMemory::materialize(uint64_t pfn) {
  uint32_t& s = slot_[pfn];
  if (s == 0) {
    store_.emplace_back();
    store_.back().fill(0);
    s = static_cast<uint32_t>(store_.size());
  }
  return store_[s - 1];
}

PageWords& PhysicalMemory::page_for_write(uint64_t pfn) {
  check(pfn * kPageSize, kPageSize);
  return materialize(pfn);
}

const PageWords* PhysicalMemory::page(uint64_t pfn) const {
  if (!backed(pfn)) return nullptr;
  return &store_[slot_[pfn] - 1];
}

uint64_t PhysicalMemory::read_u64(uint64_t addr) const {
  check(addr, 8);
  const PageWords* p = page(addr >> kPageShift);
  return p ? (*p)[(addr & (kPageSize - 1)) >> 3] : 0;
}

void PhysicalMemory::write_u64(uint64_t addr, uint64_t value) {
  check(addr, 8);
  materialize(addr >> kPageShift)[(addr & (kPageSize - 1)) >> 3] = value;
}

uint32_t PhysicalMemory::read_u32(uint64_t addr) const {
  check(addr, 4);
  const uint64_t word = read_u64(addr & ~uint64_t{7});
  return static_cast<uint32_t>(word >> ((addr & 4) * 8));
}

void PhysicalMemory::write_u32(uint64_t addr, uint32_t value) {
  check(addr, 4);
  const uint64_t base = addr & ~uint64_t{7};
  const unsigned shift = (addr & 4) * 8;
  uint64_t word = read_u64(base);
  word = (word & ~(uint64_t{0xffffffff} << shift)) | (uint64_t{value} << shift);
  write_u64(base, word);
}

bool PhysicalMemory::get_bit(uint64_t addr, unsigned bit) const {
  const uint64_t word = read_u64(addr & ~uint64_t{7});
  return (word >> ((addr & 7) * 8 + bit)) & 1;
}

void PhysicalMemory::set_bit(uint64_t addr, unsigned bit, bool value) {
  const uint64_t base = addr & ~uint64_t{7};
  const uint64_t mask = uint64_t{1} << ((addr & 7) * 8 + bit);
  const uint64_t word = read_u64(base);
  write_u64(base, value ? (word | mask) : (word & ~mask));
}

}  // namespace rowambush
