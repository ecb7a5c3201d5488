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
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rowambush/buddy.hpp"
#include "rowambush/dram.hpp"
#include "rowambush/phys_mem.hpp"
#include "rowambush/pte.hpp"
#include "rowambush/rng.hpp"
#include "rowambush/tlb.hpp"

namespace rowambush::os {

enum class Driver : uint8_t { video, sg };

const char* to_string(Driver d);
std::optional<Driver> parse_driver(const std::string& s);

struct OsConfig {
  uint64_t kernel_bytes = 512 * MiB;
  unsigned max_order = buddy::kDefaultMaxOrder;
  uint64_t vma_limit = 65536;
  uint64_t map_base = 0x100000000000ULL;
  uint64_t device_map_base = 0x200000000000ULL;
  uint64_t marker = 0x5a5a'6d61'726b'a5a5ULL;
  uint32_t video_max_chunks = 32;
  uint64_t video_chunk_bytes = 600 * KiB;
  uint64_t sg_default_bytes = 32 * KiB;
  uint64_t sg_max_bytes = 124 * KiB;
  uint32_t open_file_limit = 1021;
  size_t tlb_entries = 2048;
  /// Allocate device buffers with one guard row index on each side.
  bool guard_device_buffers = false;
};

struct TmpFile {
  uint64_t bytes = 0;
  std::vector<uint64_t> pfns;
  std::vector<buddy::Block> blocks;
};

struct Vma {
  uint64_t start = 0;
  uint64_t length = 0;
  bool populated = false;
};

/// Contiguous span of user virtual address space.
struct MappedRange {
  uint64_t base = 0;
  uint64_t bytes = 0;

  uint64_t pages() const { return bytes / kPageSize; }
  bool contains(uint64_t va) const { return va >= base && va - base < bytes; }
};

struct BufferPage {
  uint64_t vaddr = 0;
  uint64_t paddr = 0;
};

/// Kernel-allocated memory that the driver also maps into user space.
struct DoubleOwnedBuffer {
  Driver driver = Driver::video;
  std::vector<buddy::Block> chunks;
  std::vector<buddy::IsolatedBuffer> isolation;  // one per chunk when guarded
  bool user_mapped = false;
  uint64_t vbase = 0;

  uint64_t bytes() const;
  /// Page-aligned user addresses of the buffer with their physical frames.
  std::vector<BufferPage> pages() const;
};

/// Six consecutive u32 ids (uid, euid, suid, gid, egid, sgid) in a physical page.
struct CredPage {
  uint32_t pid = 0;
  uint64_t pfn = 0;
  uint32_t offset = 0;

  uint64_t addr() const { return pfn * kPageSize + offset; }
};

inline constexpr unsigned kCredIds = 6;

class OsModel {
 public:
  OsModel(const dram::DramGeometry& geometry, OsConfig config, uint64_t seed);

  const OsConfig& config() const { return config_; }
  const dram::DramGeometry& geometry() const { return allocator_.geometry(); }
  buddy::PhysicalAllocator& allocator() { return allocator_; }
  const buddy::PhysicalAllocator& allocator() const { return allocator_; }
  PhysicalMemory& memory() { return memory_; }
  const PhysicalMemory& memory() const { return memory_; }
  TlbCache& tlb() { return tlb_; }

  // --- tmp file and the spray primitive ---

  /// The in-memory file backing every spray mapping; user partition.
  const TmpFile& create_tmp_file(uint64_t bytes);
  const TmpFile& tmp_file() const { return file_; }
  /// Writes the marker at offset 0 of every file page.
  void write_markers();
  uint64_t marker() const { return config_.marker; }

  /// Maps the whole file at the next free slot; no page tables yet.
  const Vma& mmap_file();
  /// Read-touches [va, va + len) of mapped VMAs, creating PT pages as needed.
  /// Returns the number of PT pages allocated.
  size_t touch(uint64_t va, uint64_t len);
  /// mmap_file() followed by touching the entire mapping.
  size_t mmap_primitive();

  size_t vma_count() const { return vmas_.size(); }
  const std::vector<Vma>& vmas() const { return vmas_; }
  MappedRange mapped_range() const;

  const std::vector<uint64_t>& pt_pages() const { return pt_pfns_; }
  bool is_pt_page(uint64_t pfn) const { return region_by_pt_.count(pfn) != 0; }
  std::optional<uint64_t> pt_page_for(uint64_t va) const;
  /// Base virtual address of the 2 MiB region a PT page translates.
  std::optional<uint64_t> region_of_pt(uint64_t pfn) const;

  // --- translation ---

  /// Current PTE value straight from memory, bypassing the TLB.
  std::optional<uint64_t> walk(uint64_t va) const;
  /// Physical address of the PTE that translates va.
  std::optional<uint64_t> pte_paddr(uint64_t va) const;
  /// Physical address for va through the TLB; nullopt on a fault.
  std::optional<uint64_t> translate(uint64_t va);
  std::optional<uint64_t> read_u64(uint64_t va);
  std::optional<uint32_t> read_u32(uint64_t va);
  /// False when the write faults (not present, read-only, or no such frame).
  bool write_u64(uint64_t va, uint64_t value);
  bool write_u32(uint64_t va, uint32_t value);
  void flush_tlb() { tlb_.flush(); }

  /// Pages of range whose first 8 bytes are not the marker, read through the
  /// TLB. Faulting pages are reported too.
  std::vector<uint64_t> scan_markers(const MappedRange& range);

  // --- double-owned device buffers ---

  DoubleOwnedBuffer open_device(Driver d) const { return DoubleOwnedBuffer{d, {}, {}, false, 0}; }
  buddy::Block add_video_chunk(DoubleOwnedBuffer& buf);
  DoubleOwnedBuffer open_video(uint32_t chunks);
  /// One more open of the sg device, with its reserved buffer resized to bytes.
  buddy::Block add_sg_open(DoubleOwnedBuffer& buf, uint64_t bytes);
  DoubleOwnedBuffer open_sg(uint32_t opens, uint64_t bytes);
  void map_buffer(DoubleOwnedBuffer& buf);
  uint32_t video_chunks_issued() const { return video_chunks_; }
  uint32_t sg_opens() const { return sg_opens_; }

  // --- credentials ---

  /// Places a cred for pid at a random free user page and random offset.
  CredPage plant_cred(uint32_t pid, uint32_t uid);
  /// Reads the uid field of pid's cred from memory.
  uint32_t getuid(uint32_t pid) const;
  const std::vector<CredPage>& creds() const { return creds_; }

 private:
  buddy::Block allocate_device_chunk(DoubleOwnedBuffer& buf, uint64_t bytes, buddy::Owner owner);
  uint64_t ensure_pt_page(uint64_t region);
  std::optional<uint64_t> cached_pte(uint64_t va);

  OsConfig config_;
  buddy::PhysicalAllocator allocator_;
  PhysicalMemory memory_;
  TlbCache tlb_;
  Rng rng_;

  TmpFile file_;
  std::vector<Vma> vmas_;
  std::vector<uint64_t> pt_pfns_;
  std::unordered_map<uint64_t, uint64_t> pt_by_region_;
  std::unordered_map<uint64_t, uint64_t> region_by_pt_;

  uint32_t video_chunks_ = 0;
  uint32_t sg_opens_ = 0;
  uint64_t next_device_va_ = 0;
  std::vector<CredPage> creds_;
};

}  // namespace rowambush::os
