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

#include <set>

#include "oracles.hpp"
#include "rowambush/error.hpp"
#include "rowambush/os_model.hpp"

namespace rowambush::os {
namespace {

TEST(Pte, RoundTripKeepsUnknownBits) {
  const uint64_t v = 0x8000'0000'1234'5067ULL;
  const auto e = PteEntry::decode(v);
  EXPECT_TRUE(e.present);
  EXPECT_TRUE(e.writable);
  EXPECT_TRUE(e.user);
  EXPECT_EQ(e.pfn, 0x12345u);
  EXPECT_EQ(e.encode(), v);
  EXPECT_EQ(PteEntry::kUserRw, 0x27u);
  EXPECT_EQ(PteEntry::make(0, PteEntry::kUserRw), 0x27u);
}

TEST(Tlb, HoldsStaleEntriesUntilFlush) {
  TlbCache t(16);
  t.insert(5, 111);
  EXPECT_EQ(*t.lookup(5), 111u);
  EXPECT_FALSE(t.lookup(21));
  t.insert(21, 222);  // same slot
  EXPECT_FALSE(t.lookup(5));
  t.flush();
  EXPECT_FALSE(t.lookup(21));
  EXPECT_EQ(t.flushes(), 1u);
}

class OsTest : public ::testing::Test {
 protected:
  dram::DramGeometry g = dram::sandy_bridge_dual_dimm();
  OsModel os{g, OsConfig{}, 1};
};

TEST_F(OsTest, TmpFileLivesInUserPartition) {
  const auto& f = os.create_tmp_file(4 * MiB);
  ASSERT_EQ(f.pfns.size(), 1024u);
  for (uint64_t pfn : f.pfns) {
    EXPECT_EQ(*os.allocator().partition_of(pfn), buddy::PartitionKind::user);
  }
}

TEST_F(OsTest, OnePtPagePerTwoMiBTouched) {
  os.create_tmp_file(4 * MiB);
  os.write_markers();
  const size_t before = os.allocator().zone(buddy::PartitionKind::kernel).allocated_pages();
  EXPECT_EQ(os.mmap_primitive(), 2u);
  EXPECT_EQ(os.mmap_primitive(), 2u);
  EXPECT_EQ(os.pt_pages().size(), 4u);
  EXPECT_EQ(os.allocator().zone(buddy::PartitionKind::kernel).allocated_pages(), before + 4);
  for (uint64_t pfn : os.pt_pages()) {
    EXPECT_TRUE(os.is_pt_page(pfn));
    EXPECT_EQ(os.allocator().allocation_at(pfn)->owner, buddy::Owner::page_table);
  }
  const auto range = os.mapped_range();
  EXPECT_EQ(range.bytes, 8 * MiB);
  EXPECT_TRUE(os.scan_markers(range).empty());
  // Second mapping aliases the same file pages.
  EXPECT_EQ(*os.translate(range.base), *os.translate(range.base + 4 * MiB));
}

TEST_F(OsTest, SeventeenThousandMappingsCost68MiBOfPageTables) {
  os.create_tmp_file(2 * MiB);
  os.write_markers();
  size_t pts = 0;
  for (int i = 0; i < 17408; ++i) pts += os.mmap_primitive();
  EXPECT_EQ(os.vma_count(), 17408u);
  EXPECT_EQ(pts * kPageSize, 68 * MiB);
  EXPECT_EQ(os.allocator().zone(buddy::PartitionKind::kernel).pages_owned_by(buddy::Owner::page_table), pts);
  EXPECT_EQ(os.mapped_range().bytes, 17408 * 2 * MiB);
}

TEST_F(OsTest, FileMustCoverWholeTables) {
  EXPECT_THROW(os.create_tmp_file(4 * KiB), InvalidArgument);
}

TEST(OsLimits, VmaLimit) {
  OsConfig c;
  c.vma_limit = 4;
  OsModel os(dram::sandy_bridge_dual_dimm(), c, 1);
  os.create_tmp_file(2 * MiB);
  for (int i = 0; i < 3; ++i) os.mmap_file();
  EXPECT_THROW(os.mmap_file(), VmaLimitExceeded);
}

TEST_F(OsTest, WritesGoThroughAndTlbGoesStale) {
  os.create_tmp_file(2 * MiB);
  os.write_markers();
  os.mmap_primitive();
  const auto range = os.mapped_range();
  const uint64_t va = range.base + 7 * kPageSize;
  EXPECT_EQ(*os.read_u64(va), os.marker());
  ASSERT_TRUE(os.write_u64(va + 8, 42));
  EXPECT_EQ(*os.read_u64(va + 8), 42u);

  // Redirect the PTE of va behind the TLB's back.
  const uint64_t pte_addr = *os.pte_paddr(va);
  const uint64_t target_pfn = os.tmp_file().pfns[3];
  os.memory().write_u64(pte_addr, PteEntry::make(target_pfn));
  EXPECT_EQ(*os.read_u64(va + 8), 42u);  // cached translation
  os.flush_tlb();
  EXPECT_EQ(*os.translate(va), target_pfn * kPageSize);

  os.memory().write_u64(pte_addr, PteEntry::make(target_pfn, PteEntry::kPresent | PteEntry::kUser));
  os.flush_tlb();
  EXPECT_FALSE(os.write_u64(va, 1));
  os.memory().write_u64(pte_addr, 0);
  os.flush_tlb();
  EXPECT_FALSE(os.read_u64(va));
  EXPECT_EQ(os.scan_markers(range).size(), 1u);
  EXPECT_FALSE(os.read_u64(range.base + range.bytes));
}

TEST_F(OsTest, VideoBufferCapsAndMapping) {
  auto buf = os.open_video(32);
  EXPECT_EQ(buf.chunks.size(), 32u);
  EXPECT_EQ(buf.bytes(), 32 * 600 * KiB);
  EXPECT_THROW(os.add_video_chunk(buf), DriverLimitExceeded);
  for (const auto& c : buf.chunks) {
    EXPECT_EQ(*os.allocator().partition_of(c.base_pfn), buddy::PartitionKind::kernel);
    EXPECT_EQ(c.owner, buddy::Owner::video_buffer);
  }
  os.map_buffer(buf);
  ASSERT_TRUE(buf.user_mapped);
  const auto pages = buf.pages();
  ASSERT_EQ(pages.size(), 32u * 150u);
  EXPECT_EQ(pages[151].vaddr, buf.vbase + 151 * kPageSize);
  EXPECT_EQ(pages[151].paddr, buf.chunks[1].base_addr() + kPageSize);
}

TEST_F(OsTest, SgBufferCaps) {
  EXPECT_THROW(os.open_sg(1, 125 * KiB), DriverLimitExceeded);
  auto buf = os.open_sg(1021, 124 * KiB);
  EXPECT_EQ(buf.bytes(), 1021 * 124 * KiB);
  EXPECT_THROW(os.add_sg_open(buf, 4 * KiB), DriverLimitExceeded);
}

TEST(OsGuard, GuardedBuffersAreIsolated) {
  OsConfig c;
  c.guard_device_buffers = true;
  OsModel os(dram::sandy_bridge_dual_dimm(), c, 1);
  auto buf = os.open_video(2);
  ASSERT_EQ(buf.isolation.size(), 2u);
  EXPECT_EQ(buf.isolation[0].guard_row_cost_bytes, 16 * KiB);
  EXPECT_EQ(buf.isolation[1].buffer.base_pfn, buf.chunks[1].base_pfn);
}

TEST_F(OsTest, CredsAreFindableAndGetuidReadsMemory) {
  const auto cred = os.plant_cred(1, 1000);
  EXPECT_EQ(os.getuid(1), 1000u);
  EXPECT_EQ(cred.offset % 8, 0u);
  EXPECT_EQ(*os.allocator().partition_of(cred.pfn), buddy::PartitionKind::user);
  const auto hits = oracle::pages_with_pattern(os.memory(), 1000);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0], cred.pfn);
  os.memory().write_u32(cred.addr(), 0);
  EXPECT_EQ(os.getuid(1), 0u);
}

TEST(OsDeterminism, SameSeedSameCredPlacement) {
  const auto g = dram::sandy_bridge_dual_dimm();
  OsModel a(g, OsConfig{}, 9), b(g, OsConfig{}, 9), c(g, OsConfig{}, 10);
  EXPECT_EQ(a.plant_cred(1, 5).addr(), b.plant_cred(1, 5).addr());
  EXPECT_NE(a.plant_cred(2, 5).addr(), c.plant_cred(2, 5).addr());
}

}  // namespace
}  // namespace rowambush::os
