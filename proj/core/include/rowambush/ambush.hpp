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
#include <functional>
#include <utility>
#include <vector>

#include "rowambush/dram.hpp"
#include "rowambush/os_model.hpp"

namespace rowambush::ambush {

struct DriverSizing {
  uint32_t video_chunks = 32;
  uint64_t video_chunk_bytes = 600 * KiB;
  uint32_t sg_opens = 256;
  uint64_t sg_bytes = 124 * KiB;
  uint64_t vma_limit = 65536;
};

/// Sizing of the attack for one memory threshold.
///
/// dev_buf_size is the device buffer rounded down to whole MiB, the figure the
/// sizing loop uses (18 MiB for the 18.75 MiB video buffer). pt_page_budget is
/// what the placement may actually spray: the threshold minus the real buffer
/// and the file, so the footprint never exceeds the threshold.
struct AmbushPlan {
  os::Driver driver = os::Driver::video;
  uint64_t threshold_mem_size = 0;
  uint64_t dev_buf_size = 0;
  uint64_t actual_dev_buf_size = 0;
  uint64_t file_size = 0;
  uint64_t page_size = kPageSize;
  uint64_t pt_size = 0;
  uint64_t map_mem_size = 0;
  uint64_t vma_num = 0;
  uint64_t vma_limit = 65536;
  uint64_t pt_page_budget = 0;
  uint32_t chunks = 0;
  uint64_t chunk_bytes = 0;
};

/// Throws InvalidArgument when threshold < dev_buf_size + 2 MiB.
AmbushPlan plan(uint64_t threshold, os::Driver driver, const DriverSizing& sizing = {});

struct AmbushOptions {
  /// After the drain, re-read the free lists and keep draining whatever small
  /// blocks appeared meanwhile, up to fresh_drain_cap_bytes.
  bool refresh_on_recheck = true;
  uint64_t fresh_drain_cap_bytes = 16 * MiB;
  /// Runs once the first drain completes; models other processes freeing
  /// kernel memory while the attack is underway.
  std::function<void()> after_drain;
};

struct Placement {
  AmbushPlan plan;
  os::DoubleOwnedBuffer buffer;
  os::MappedRange mapped;
  uint64_t small_block_bytes_initial = 0;
  uint64_t drained_pt_pages = 0;
  uint64_t fresh_pt_pages = 0;
  uint64_t stuffed_pt_pages = 0;
  uint64_t extra_pt_pages = 0;
  bool drain_complete = false;
  uint64_t peak_footprint_bytes = 0;

  uint64_t pt_pages() const { return drained_pt_pages + fresh_pt_pages + stuffed_pt_pages + extra_pt_pages; }
  /// Device buffer + tmp file + PT pages.
  uint64_t footprint_bytes() const;
};

/// Free kernel bytes in blocks below the target order.
uint64_t small_block_bytes(const os::OsModel& os);
unsigned target_order(const dram::DramGeometry& g);

/// Drives the placement steps against one simulated system.
class Ambusher {
 public:
  Ambusher(os::OsModel& os, AmbushPlan plan, AmbushOptions options = {});

  /// Creates and marks the tmp file, then sprays PT pages until the kernel has
  /// no free block below the target order (or the PT budget is spent).
  /// Returns PT pages created.
  uint64_t drain_small_blocks();
  /// Allocates device chunks one at a time, each followed by PT pages that
  /// take the small blocks the chunk left behind; then sprays the remaining
  /// budget.
  void place_interleaved();
  /// drain_small_blocks() followed by place_interleaved().
  Placement run();

  const Placement& placement() const { return placement_; }

 private:
  bool spray_once();
  uint64_t drain_loop(uint64_t limit_pages);
  void note_footprint();

  os::OsModel& os_;
  AmbushOptions options_;
  Placement placement_;
  uint64_t pt_per_mmap_ = 1;
};

struct Adjacency {
  bool adjacent = false;
  /// (buffer row, neighbouring row holding PT pages)
  std::vector<std::pair<dram::RowKey, dram::RowKey>> pairs;
};

/// Oracle view: rows holding buffer bytes that neighbour, in the same bank, a
/// row holding PT bytes.
Adjacency verify_adjacency(const Placement& placement, const os::OsModel& os);

}  // namespace rowambush::ambush
