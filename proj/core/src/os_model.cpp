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
#include "rowambush/os_model.hpp"

#include <algorithm>

#include "rowambush/error.hpp"

namespace rowambush::os {

namespace {

constexpr unsigned kRegionShift = 21;  // one PT page translates 2 MiB

uint64_t region_of(uint64_t va) { return va >> kRegionShift; }
unsigned pte_index(uint64_t va) { return static_cast<unsigned>((va >> kPageShift) & (kPtesPerPage - 1)); }

}  // namespace

const char* to_string(Driver d) { return d == Driver::video ? "video" : "sg"; }

std::optional<Driver> parse_driver(const std::string& s) {
  if (s == "video") return Driver::video;
  if (s == "sg") return Driver::sg;
  return std::nullopt;
}

uint64_t DoubleOwnedBuffer::bytes() const {
  uint64_t n = 0;
  for (const auto& c : chunks) n += c.bytes();
  return n;
}

std::vector<BufferPage> DoubleOwnedBuffer::pages() const {
  std::vector<BufferPage> out;
  uint64_t va = vbase;
  for (const auto& c : chunks) {
    for (uint64_t i = 0; i < c.pages; ++i) {
      out.push_back({va, (c.base_pfn + i) * kPageSize});
      va += kPageSize;
    }
  }
  return out;
}

OsModel::OsModel(const dram::DramGeometry& geometry, OsConfig config, uint64_t seed)
    : config_(config),
      allocator_(geometry, config.kernel_bytes, config.max_order),
      memory_(geometry.capacity()),
      tlb_(config.tlb_entries),
      rng_(derive_seed(seed, 0x05)),
      next_device_va_(config.device_map_base) {
  if (config_.map_base % (uint64_t{1} << kRegionShift) != 0) {
    throw InvalidArgument("mapping base must be 2 MiB aligned");
  }
  if (config_.marker == 0 || config_.marker == PteEntry::kUserRw) {
    throw InvalidArgument("marker must differ from zero and from the probe entry");
  }
}

// --- tmp file ----------------------------------------------------------------

const TmpFile& OsModel::create_tmp_file(uint64_t bytes) {
  if (!file_.pfns.empty()) throw InvalidArgument("tmp file already exists");
  if (bytes == 0 || bytes % kPtSpan != 0) throw InvalidArgument("tmp file size must be a multiple of 2 MiB");
  auto& zone = allocator_.zone(buddy::PartitionKind::user);
  const uint64_t max_block = uint64_t{1} << zone.max_order();
  uint64_t remaining = bytes / kPageSize;
  while (remaining > 0) {
    const uint64_t n = std::min(remaining, max_block);
    buddy::Block b = zone.allocate_pages(n, buddy::Owner::tmp_file);
    file_.blocks.push_back(b);
    for (uint64_t i = 0; i < n; ++i) file_.pfns.push_back(b.base_pfn + i);
    remaining -= n;
  }
  file_.bytes = bytes;
  return file_;
}

void OsModel::write_markers() {
  for (uint64_t pfn : file_.pfns) memory_.write_u64(pfn * kPageSize, config_.marker);
}

const Vma& OsModel::mmap_file() {
  if (file_.pfns.empty()) throw InvalidArgument("mmap before the tmp file exists");
  if (vmas_.size() + 1 >= config_.vma_limit) {
    throw VmaLimitExceeded("mapping " + std::to_string(vmas_.size() + 1) + " reaches the VMA limit of " +
                           std::to_string(config_.vma_limit));
  }
  vmas_.push_back(Vma{config_.map_base + vmas_.size() * file_.bytes, file_.bytes, false});
  return vmas_.back();
}

uint64_t OsModel::ensure_pt_page(uint64_t region) {
  auto it = pt_by_region_.find(region);
  if (it != pt_by_region_.end()) return it->second;
  buddy::Block b = allocator_.allocate(buddy::PartitionKind::kernel, 0, buddy::Owner::page_table);
  pt_pfns_.push_back(b.base_pfn);
  pt_by_region_.emplace(region, b.base_pfn);
  region_by_pt_.emplace(b.base_pfn, region);
  return b.base_pfn;
}

size_t OsModel::touch(uint64_t va, uint64_t len) {
  const MappedRange mapped = mapped_range();
  if (len == 0) return 0;
  if (!mapped.contains(va) || !mapped.contains(va + len - 1)) {
    throw AddressOutOfRange("touch outside the mapped range");
  }
  const size_t before = pt_pfns_.size();
  const uint64_t file_pages = file_.pfns.size();
  uint64_t p = va & ~(kPageSize - 1);
  while (p < va + len) {
    const uint64_t region = region_of(p);
    PageWords& table = memory_.page_for_write(ensure_pt_page(region));
    const uint64_t stop = std::min(va + len, (region << kRegionShift) + kPtSpan);
    for (; p < stop; p += kPageSize) {
      const uint64_t file_index = ((p - config_.map_base) / kPageSize) % file_pages;
      table[pte_index(p)] = PteEntry::make(file_.pfns[file_index]);
    }
  }
  return pt_pfns_.size() - before;
}

size_t OsModel::mmap_primitive() {
  const Vma& v = mmap_file();
  const size_t created = touch(v.start, v.length);
  vmas_.back().populated = true;
  return created;
}

MappedRange OsModel::mapped_range() const {
  return MappedRange{config_.map_base, vmas_.size() * file_.bytes};
}

std::optional<uint64_t> OsModel::pt_page_for(uint64_t va) const {
  auto it = pt_by_region_.find(region_of(va));
  if (it == pt_by_region_.end()) return std::nullopt;
  return it->second;
}

std::optional<uint64_t> OsModel::region_of_pt(uint64_t pfn) const {
  auto it = region_by_pt_.find(pfn);
  if (it == region_by_pt_.end()) return std::nullopt;
  return it->second << kRegionShift;
}

// --- translation -------------------------------------------------------------

std::optional<uint64_t> OsModel::pte_paddr(uint64_t va) const {
  auto pt = pt_page_for(va);
  if (!pt) return std::nullopt;
  return *pt * kPageSize + pte_index(va) * 8;
}

std::optional<uint64_t> OsModel::walk(uint64_t va) const {
  auto at = pte_paddr(va);
  if (!at) return std::nullopt;
  return memory_.read_u64(*at);
}

std::optional<uint64_t> OsModel::cached_pte(uint64_t va) {
  const uint64_t vpn = va >> kPageShift;
  if (auto hit = tlb_.lookup(vpn)) return hit;
  auto pte = walk(va);
  if (!pte) return std::nullopt;
  const PteEntry e = PteEntry::decode(*pte);
  if (e.present && e.pfn < memory_.pages()) tlb_.insert(vpn, *pte);
  return pte;
}

std::optional<uint64_t> OsModel::translate(uint64_t va) {
  auto pte = cached_pte(va);
  if (!pte) return std::nullopt;
  const PteEntry e = PteEntry::decode(*pte);
  if (!e.present || !e.user || e.pfn >= memory_.pages()) return std::nullopt;
  return e.pfn * kPageSize + (va & (kPageSize - 1));
}

std::optional<uint64_t> OsModel::read_u64(uint64_t va) {
  auto pa = translate(va);
  if (!pa) return std::nullopt;
  return memory_.read_u64(*pa);
}

std::optional<uint32_t> OsModel::read_u32(uint64_t va) {
  auto pa = translate(va);
  if (!pa) return std::nullopt;
  return memory_.read_u32(*pa);
}

bool OsModel::write_u64(uint64_t va, uint64_t value) {
  auto pte = cached_pte(va);
  if (!pte || !PteEntry::decode(*pte).writable) return false;
  auto pa = translate(va);
  if (!pa) return false;
  memory_.write_u64(*pa, value);
  return true;
}

bool OsModel::write_u32(uint64_t va, uint32_t value) {
  auto pte = cached_pte(va);
  if (!pte || !PteEntry::decode(*pte).writable) return false;
  auto pa = translate(va);
  if (!pa) return false;
  memory_.write_u32(*pa, value);
  return true;
}

std::vector<uint64_t> OsModel::scan_markers(const MappedRange& range) {
  std::vector<uint64_t> out;
  for (uint64_t va = range.base; va < range.base + range.bytes; va += kPageSize) {
    auto v = read_u64(va);
    if (!v || *v != config_.marker) out.push_back(va);
  }
  return out;
}

// --- devices -----------------------------------------------------------------

buddy::Block OsModel::allocate_device_chunk(DoubleOwnedBuffer& buf, uint64_t bytes, buddy::Owner owner) {
  if (config_.guard_device_buffers) {
    buddy::IsolatedBuffer iso = allocator_.allocate_isolated_buffer(buddy::PartitionKind::kernel, bytes, owner);
    buf.isolation.push_back(iso);
    buf.chunks.push_back(iso.buffer);
    return iso.buffer;
  }
  buddy::Block b = allocator_.allocate_pages(buddy::PartitionKind::kernel, div_ceil(bytes, kPageSize), owner);
  buf.chunks.push_back(b);
  return b;
}

buddy::Block OsModel::add_video_chunk(DoubleOwnedBuffer& buf) {
  if (buf.driver != Driver::video) throw InvalidArgument("not a video buffer");
  if (video_chunks_ >= config_.video_max_chunks) {
    throw DriverLimitExceeded("video driver allows at most " + std::to_string(config_.video_max_chunks) +
                              " buffers");
  }
  buddy::Block b = allocate_device_chunk(buf, config_.video_chunk_bytes, buddy::Owner::video_buffer);
  ++video_chunks_;
  return b;
}

DoubleOwnedBuffer OsModel::open_video(uint32_t chunks) {
  DoubleOwnedBuffer buf = open_device(Driver::video);
  for (uint32_t i = 0; i < chunks; ++i) add_video_chunk(buf);
  return buf;
}

buddy::Block OsModel::add_sg_open(DoubleOwnedBuffer& buf, uint64_t bytes) {
  if (buf.driver != Driver::sg) throw InvalidArgument("not an sg buffer");
  if (bytes == 0 || bytes > config_.sg_max_bytes) {
    throw DriverLimitExceeded("sg reserved buffer must be 1.." + std::to_string(config_.sg_max_bytes) + " bytes");
  }
  if (sg_opens_ >= config_.open_file_limit) {
    throw DriverLimitExceeded("sg opens exceed the open-file limit of " + std::to_string(config_.open_file_limit));
  }
  buddy::Block b = allocate_device_chunk(buf, bytes, buddy::Owner::sg_buffer);
  ++sg_opens_;
  return b;
}

DoubleOwnedBuffer OsModel::open_sg(uint32_t opens, uint64_t bytes) {
  DoubleOwnedBuffer buf = open_device(Driver::sg);
  for (uint32_t i = 0; i < opens; ++i) add_sg_open(buf, bytes);
  return buf;
}

void OsModel::map_buffer(DoubleOwnedBuffer& buf) {
  if (buf.user_mapped) return;
  buf.vbase = next_device_va_;
  next_device_va_ += div_ceil(buf.bytes(), kPtSpan) * kPtSpan + kPtSpan;
  buf.user_mapped = true;
}

// --- credentials -------------------------------------------------------------

CredPage OsModel::plant_cred(uint32_t pid, uint32_t uid) {
  for (const auto& c : creds_) {
    if (c.pid == pid) throw InvalidArgument("pid " + std::to_string(pid) + " already has a cred");
  }
  auto& zone = allocator_.zone(buddy::PartitionKind::user);
  if (zone.free_pages() == 0) throw OutOfMemory("no free user page for a cred");
  uint64_t pfn = 0;
  do {
    pfn = zone.begin_pfn() + rng_.below(zone.capacity_pages());
  } while (!zone.is_free(pfn));
  zone.claim(pfn, buddy::Owner::cred);
  const uint32_t slots = (kPageSize - kCredIds * 4) / 8 + 1;
  CredPage c{pid, pfn, static_cast<uint32_t>(rng_.below(slots) * 8)};
  for (unsigned i = 0; i < kCredIds; ++i) memory_.write_u32(c.addr() + 4 * i, uid);
  creds_.push_back(c);
  return c;
}

uint32_t OsModel::getuid(uint32_t pid) const {
  for (const auto& c : creds_) {
    if (c.pid == pid) return memory_.read_u32(c.addr());
  }
  throw InvalidArgument("unknown pid " + std::to_string(pid));
}

}  // namespace rowambush::os
