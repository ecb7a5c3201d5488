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
#include <gtest/gtest.h>

#include "rowambush/ambush.hpp"
#include "rowambush/error.hpp"
#include "rowambush/profile.hpp"
#include "rowambush/workload.hpp"

namespace rowambush::ambush {
namespace {

// Reference sizing loop written out step by step.
struct RefPlan {
  uint64_t file, pt, vma;
};

RefPlan reference_plan(uint64_t threshold, uint64_t dev_buf_whole_mib, uint64_t limit) {
  uint64_t file = 2 * MiB;
  for (;;) {
    const uint64_t pt = threshold - dev_buf_whole_mib - file;
    const uint64_t pt_pages = pt / kPageSize;
    const uint64_t pts_per_mapping = file / (2 * MiB);
    const uint64_t vma = pt_pages / pts_per_mapping;
    if (vma < limit) return {file, pt, vma};
    file *= 2;
  }
}

TEST(Plan, VideoAtEightyEightMiB) {
  const auto p = plan(88 * MiB, os::Driver::video);
  EXPECT_EQ(p.dev_buf_size, 18 * MiB);
  EXPECT_EQ(p.actual_dev_buf_size, 18 * MiB + 768 * KiB);
  EXPECT_EQ(p.file_size, 2 * MiB);
  EXPECT_EQ(p.pt_size, 68 * MiB);
  EXPECT_EQ(p.vma_num, 17408u);
  EXPECT_EQ(p.map_mem_size, 17408 * 2 * MiB);
  EXPECT_EQ(p.pt_page_budget, 17216u);
}

TEST(Plan, LargeThresholdGrowsTheFile) {
  const auto p = plan(400 * MiB, os::Driver::video);
  EXPECT_EQ(p.file_size, 4 * MiB);
  EXPECT_EQ(p.vma_num, 48384u);
  EXPECT_LT(p.vma_num, p.vma_limit);
  // Before growing: 380 MiB of PT pages would need 97280 mappings.
  EXPECT_EQ((400 - 18 - 2) * MiB / kPageSize, 97280u);
}

TEST(Plan, SgDriverUsesWholeMiB) {
  const auto p = plan(109 * MiB, os::Driver::sg);
  EXPECT_EQ(p.actual_dev_buf_size, 256 * 124 * KiB);
  EXPECT_EQ(p.dev_buf_size, 31 * MiB);
  EXPECT_EQ(p.pt_size, 76 * MiB);
}

TEST(Plan, MatchesReferenceLoop) {
  for (uint64_t t = 20; t <= 2048; t += 7) {
    for (auto d : {os::Driver::video, os::Driver::sg}) {
      const uint64_t threshold = t * MiB + 4096 * (t % 3);
      const uint64_t dev = plan(1 * GiB, d).dev_buf_size;
      if (dev + 2 * MiB > threshold) continue;
      const auto p = plan(threshold, d);
      const auto ref = reference_plan(threshold, dev, p.vma_limit);
      EXPECT_EQ(p.file_size, ref.file) << t;
      EXPECT_EQ(p.pt_size, ref.pt) << t;
      EXPECT_EQ(p.vma_num, ref.vma) << t;
      const uint64_t committed = p.actual_dev_buf_size + p.file_size;
      EXPECT_LE(p.pt_page_budget * kPageSize, threshold > committed ? threshold - committed : 0) << t;
      EXPECT_LE(p.pt_page_budget * kPageSize, p.pt_size) << t;
    }
  }
}

TEST(Plan, Boundary) {
  EXPECT_NO_THROW(plan(20 * MiB, os::Driver::video));
  EXPECT_THROW(plan(20 * MiB - 1, os::Driver::video), InvalidArgument);
  EXPECT_EQ(plan(20 * MiB, os::Driver::video).pt_size, 0u);
  EXPECT_EQ(plan(20 * MiB, os::Driver::video).pt_page_budget, 0u);
}

struct System {
  explicit System(const MachineProfile& prof, uint64_t seed)
      : os(prof.geometry(), config(prof), seed), rng(seed ^ 0x55) {
    preload = buddy::preload_kernel(os.allocator(), prof.residue_bytes, prof.preload_free_fraction,
                                    target_order(prof.geometry()), rng);
  }
  static os::OsConfig config(const MachineProfile& p) {
    os::OsConfig c;
    c.kernel_bytes = p.kernel_bytes;
    return c;
  }
  os::OsModel os;
  Rng rng;
  buddy::Preload preload;
};

TEST(Drain, DellResidueIsFourteenThousandPages) {
  const auto prof = dell_e6420_profile();
  System s(prof, 3);
  EXPECT_EQ(small_block_bytes(s.os), 56 * MiB);
  Ambusher a(s.os, plan(prof.video_threshold, os::Driver::video));
  EXPECT_EQ(a.drain_small_blocks(), 14336u);
  EXPECT_EQ(small_block_bytes(s.os), 0u);
  EXPECT_TRUE(a.placement().drain_complete);
}

TEST(Drain, LenovoResidue) {
  const auto prof = lenovo_t420_profile();
  System s(prof, 3);
  Ambusher a(s.os, plan(prof.video_threshold, os::Driver::video));
  EXPECT_EQ(a.drain_small_blocks(), 29440u);
}

TEST(Drain, RecheckPicksUpFreshSmallBlocks) {
  const auto prof = dell_e6420_profile();
  System s(prof, 4);
  AmbushOptions opt;
  opt.after_drain = [&] {
    buddy::release_fresh_small_blocks(s.os.allocator(), s.preload, 2 * MiB, target_order(s.os.geometry()), s.rng);
  };
  Ambusher a(s.os, plan(prof.video_threshold, os::Driver::video), opt);
  const auto p = a.run();
  EXPECT_EQ(p.fresh_pt_pages, 512u);
  EXPECT_EQ(p.drained_pt_pages, 14336u);
}

TEST(Placement, DellVideoIsAdjacentWithinThreshold) {
  const auto prof = dell_e6420_profile();
  for (uint64_t seed = 0; seed < 3; ++seed) {
    System s(prof, seed);
    Ambusher a(s.os, plan(prof.video_threshold, os::Driver::video));
    const auto p = a.run();
    EXPECT_EQ(p.drained_pt_pages, 14336u);
    EXPECT_EQ(p.stuffed_pt_pages + p.extra_pt_pages, 17216u - 14336u);
    EXPECT_EQ(p.footprint_bytes(), 88 * MiB);
    EXPECT_LE(p.peak_footprint_bytes, 88 * MiB);
    EXPECT_EQ(p.buffer.chunks.size(), 32u);
    const auto adj = verify_adjacency(p, s.os);
    EXPECT_TRUE(adj.adjacent) << seed;
    for (const auto& [buf_row, pt_row] : adj.pairs) {
      EXPECT_EQ(buf_row.bank, pt_row.bank);
      EXPECT_EQ(buf_row.dimm, pt_row.dimm);
      EXPECT_EQ(buf_row.row + 1 == pt_row.row || pt_row.row + 1 == buf_row.row, true);
    }
  }
}

TEST(Placement, NoPtPagesMeansNoAdjacency) {
  const auto prof = dell_e6420_profile();
  System s(prof, 1);
  Ambusher a(s.os, plan(20 * MiB, os::Driver::video));
  const auto p = a.run();
  EXPECT_EQ(p.pt_pages(), 0u);
  EXPECT_FALSE(verify_adjacency(p, s.os).adjacent);
}

TEST(Placement, GuardedBuffersNeverTouchPageTables) {
  const auto prof = dell_e6420_profile();
  auto cfg = System::config(prof);
  cfg.guard_device_buffers = true;
  os::OsModel os(prof.geometry(), cfg, 2);
  Rng rng(2);
  buddy::preload_kernel(os.allocator(), prof.residue_bytes, 0.5, target_order(os.geometry()), rng);
  Ambusher a(os, plan(prof.video_threshold, os::Driver::video));
  const auto p = a.run();
  EXPECT_GT(p.pt_pages(), 0u);
  EXPECT_FALSE(verify_adjacency(p, os).adjacent);
}

}  // namespace
}  // namespace rowambush::ambush
