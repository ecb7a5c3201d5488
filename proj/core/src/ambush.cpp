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
#include "rowambush/ambush.hpp"

#include <algorithm>
#include <unordered_set>

#include "rowambush/error.hpp"

namespace rowambush::ambush {

AmbushPlan plan(uint64_t threshold, os::Driver driver, const DriverSizing& sizing) {
  AmbushPlan p;
  p.driver = driver;
  p.threshold_mem_size = threshold;
  p.vma_limit = sizing.vma_limit;
  if (driver == os::Driver::video) {
    p.chunks = sizing.video_chunks;
    p.chunk_bytes = sizing.video_chunk_bytes;
  } else {
    p.chunks = sizing.sg_opens;
    p.chunk_bytes = sizing.sg_bytes;
  }
  p.actual_dev_buf_size = uint64_t{p.chunks} * p.chunk_bytes;
  p.dev_buf_size = p.actual_dev_buf_size / MiB * MiB;

  p.file_size = 2 * MiB;
  if (threshold < p.dev_buf_size + p.file_size) {
    throw InvalidArgument("threshold " + std::to_string(threshold) + " is below the device buffer plus 2 MiB");
  }
  for (;;) {
    p.pt_size = threshold - p.dev_buf_size - p.file_size;
    p.map_mem_size = p.pt_size * kPtesPerPage;
    p.vma_num = p.map_mem_size / p.file_size;
    if (p.vma_num < p.vma_limit) break;
    p.file_size *= 2;
  }
  const uint64_t committed = p.actual_dev_buf_size + p.file_size;
  const uint64_t budget_bytes = threshold > committed ? std::min(p.pt_size, threshold - committed) : 0;
  p.pt_page_budget = budget_bytes / kPageSize;
  return p;
}

uint64_t Placement::footprint_bytes() const {
  return buffer.bytes() + plan.file_size + pt_pages() * kPageSize;
}

unsigned target_order(const dram::DramGeometry& g) {
  return log2_floor(g.target_block_size() / kPageSize);
}

uint64_t small_block_bytes(const os::OsModel& os) {
  const auto& zone = os.allocator().zone(buddy::PartitionKind::kernel);
  const unsigned limit = std::min(target_order(os.geometry()), zone.max_order() + 1);
  uint64_t pages = 0;
  for (unsigned j = 0; j < limit; ++j) pages += zone.free_list(j).size() << j;
  return pages * kPageSize;
}

Ambusher::Ambusher(os::OsModel& os, AmbushPlan plan, AmbushOptions options)
    : os_(os), options_(std::move(options)) {
  placement_.plan = plan;
  placement_.buffer = os_.open_device(plan.driver);
  pt_per_mmap_ = plan.file_size / kPtSpan;
}

void Ambusher::note_footprint() {
  placement_.peak_footprint_bytes = std::max(placement_.peak_footprint_bytes, placement_.footprint_bytes());
}

bool Ambusher::spray_once() {
  if (placement_.pt_pages() + pt_per_mmap_ > placement_.plan.pt_page_budget) return false;
  if (os_.vma_count() >= placement_.plan.vma_num) return false;
  os_.mmap_primitive();
  return true;
}

uint64_t Ambusher::drain_loop(uint64_t limit_pages) {
  uint64_t made = 0;
  while (made + pt_per_mmap_ <= limit_pages && small_block_bytes(os_) > 0) {
    if (!spray_once()) break;
    made += pt_per_mmap_;
  }
  return made;
}

uint64_t Ambusher::drain_small_blocks() {
  if (os_.tmp_file().pfns.empty()) {
    os_.create_tmp_file(placement_.plan.file_size);
    os_.write_markers();
  }
  placement_.small_block_bytes_initial = small_block_bytes(os_);
  placement_.drained_pt_pages += drain_loop(UINT64_MAX);
  placement_.drain_complete = small_block_bytes(os_) == 0;

  if (options_.after_drain) options_.after_drain();
  if (options_.refresh_on_recheck) {
    placement_.fresh_pt_pages += drain_loop(options_.fresh_drain_cap_bytes / kPageSize);
    placement_.drain_complete = small_block_bytes(os_) == 0;
  }
  placement_.mapped = os_.mapped_range();
  note_footprint();
  return placement_.drained_pt_pages + placement_.fresh_pt_pages;
}

void Ambusher::place_interleaved() {
  if (os_.tmp_file().pfns.empty()) throw InvalidArgument("placement before the drain");
  auto& buf = placement_.buffer;
  for (uint32_t i = 0; i < placement_.plan.chunks; ++i) {
    if (buf.driver == os::Driver::video) {
      os_.add_video_chunk(buf);
    } else {
      os_.add_sg_open(buf, placement_.plan.chunk_bytes);
    }
    while (small_block_bytes(os_) > 0 && spray_once()) placement_.stuffed_pt_pages += pt_per_mmap_;
    note_footprint();
  }
  os_.map_buffer(buf);
  while (spray_once()) placement_.extra_pt_pages += pt_per_mmap_;
  placement_.mapped = os_.mapped_range();
  note_footprint();
}

Placement Ambusher::run() {
  drain_small_blocks();
  place_interleaved();
  return placement_;
}

Adjacency verify_adjacency(const Placement& placement, const os::OsModel& os) {
  const auto& g = os.geometry();
  std::unordered_set<dram::RowKey, dram::RowKeyHash> pt_rows;
  for (uint64_t pfn : os.pt_pages()) {
    for (const auto& r : g.rows_of_range(pfn * kPageSize, kPageSize)) pt_rows.insert(r);
  }
  std::vector<dram::RowKey> buffer_rows;
  for (const auto& c : placement.buffer.chunks) {
    for (const auto& r : g.rows_of_range(c.base_addr(), c.bytes())) buffer_rows.push_back(r);
  }
  std::sort(buffer_rows.begin(), buffer_rows.end());
  buffer_rows.erase(std::unique(buffer_rows.begin(), buffer_rows.end()), buffer_rows.end());

  Adjacency out;
  for (const auto& r : buffer_rows) {
    for (int d : {-1, 1}) {
      if (d < 0 && r.row == 0) continue;
      if (d > 0 && r.row + 1 >= g.rows_per_bank()) continue;
      dram::RowKey n = r;
      n.row = r.row + d;
      if (pt_rows.count(n)) out.pairs.emplace_back(r, n);
    }
  }
  out.adjacent = !out.pairs.empty();
  return out;
}

}  // namespace rowambush::ambush
