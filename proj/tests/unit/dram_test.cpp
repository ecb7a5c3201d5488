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
#include "rowambush/dram.hpp"
#include "rowambush/error.hpp"
#include "rowambush/phys_mem.hpp"

namespace rowambush::dram {
namespace {

DramGeometry tiny() {
  MappingSpec m;
  m.bank_functions = {{12, 13}};
  m.row_lo = 13;
  m.row_hi = 14;
  return DramGeometry(1, 1, 2, 4, 4 * KiB, m);
}

TEST(Geometry, DellRowIndexSizes) {
  const auto g = sandy_bridge_dual_dimm();
  EXPECT_EQ(g.capacity(), 8 * GiB);
  EXPECT_EQ(g.rows_size_per_row_index(), 256 * KiB);
  EXPECT_EQ(g.target_block_size(), 512 * KiB);
}

TEST(Geometry, DegenerateSingleBank) {
  MappingSpec m;
  m.row_lo = 13;
  m.row_hi = 14;
  const DramGeometry g(1, 1, 1, 4, 8 * KiB, m);
  EXPECT_EQ(g.rows_size_per_row_index(), 8 * KiB);
  EXPECT_EQ(g.target_block_size(), 16 * KiB);
}

TEST(Geometry, TwoDimmsFourBanks) {
  MappingSpec m;
  m.dimm_functions = {{6}};
  m.bank_functions = {{13, 17}, {14, 18}};
  m.row_lo = 16;
  m.row_hi = 20;
  const DramGeometry g(2, 1, 4, 32, 8 * KiB, m);
  EXPECT_EQ(g.rows_size_per_row_index(), 64 * KiB);
  EXPECT_EQ(g.target_block_size(), 128 * KiB);
}

TEST(Geometry, RejectsInconsistentMappings) {
  MappingSpec m = sandy_bridge_mapping();
  m.row_lo = 17;
  EXPECT_THROW(DramGeometry(2, 2, 8, 32 * 1024, 8 * KiB, m), InvalidArgument);
  m = sandy_bridge_mapping();
  m.bank_functions[1] = {13, 18};  // pivot shared with bank bit 0
  EXPECT_THROW(DramGeometry(2, 2, 8, 32 * 1024, 8 * KiB, m), InvalidArgument);
  m = sandy_bridge_mapping();
  m.bank_functions[1] = {14, 15};  // references another pivot
  EXPECT_THROW(DramGeometry(2, 2, 8, 32 * 1024, 8 * KiB, m), InvalidArgument);
  EXPECT_THROW(DramGeometry(2, 2, 8, 32 * 1024, 6 * KiB, sandy_bridge_mapping()), InvalidArgument);
}

TEST(Mapping, DimmBitSixSplitsNeighbouringAddresses) {
  const auto g = sandy_bridge_dual_dimm();
  EXPECT_EQ(g.map(0x0FFFFFF).dimm, 1u);
  EXPECT_EQ(g.map(0x1000000).dimm, 0u);
}

TEST(Mapping, ZeroAddress) {
  const auto g = sandy_bridge_dual_dimm();
  EXPECT_EQ(g.map(0), (DramCoord{0, 0, 0, 0, 0}));
}

TEST(Mapping, RowIndexIsBits18To32) {
  const auto g = sandy_bridge_dual_dimm();
  EXPECT_EQ(g.map(0x40000).row, 1u);
  EXPECT_EQ(g.map(0x1FFFFFFFF).row, 0x7FFFu);
}

TEST(Mapping, OutOfCapacityThrows) {
  const auto g = sandy_bridge_dual_dimm();
  EXPECT_THROW(g.map(8 * GiB), AddressOutOfRange);
  EXPECT_THROW(g.unmap(DramCoord{2, 0, 0, 0, 0}), AddressOutOfRange);
}

TEST(Mapping, TinyGeometryIsABijection) {
  const auto g = tiny();
  EXPECT_EQ(g.capacity(), 32 * KiB);
  uint64_t collisions = 99;
  EXPECT_TRUE(oracle::exhaustive_bijection(g, &collisions));
  EXPECT_EQ(collisions, 0u);
}

TEST(Mapping, RandomSpecsAreBijections) {
  Rng rng(7);
  for (int i = 0; i < 5; ++i) {
    const auto m = oracle::random_mapping(rng, 1, 1, 2, 12, 3);
    const DramGeometry g(2, 2, 4, 8, 4 * KiB, m);
    EXPECT_TRUE(oracle::exhaustive_bijection(g)) << "spec " << i;
  }
}

TEST(Mapping, RowAlignedRowIndexBlockCoversWholeRows) {
  const auto g = sandy_bridge_dual_dimm();
  const uint64_t rs = g.rows_size_per_row_index();
  std::set<RowKey> rows;
  for (uint64_t a = 5 * rs; a < 6 * rs; a += 64) rows.insert(g.row_of(a));
  EXPECT_EQ(rows.size(), g.banks_total());
  for (const auto& r : rows) EXPECT_EQ(r.row, 5u);
}

TEST(Mapping, SandyBridgeRoundTripsSampledAddresses) {
  const auto g = sandy_bridge_dual_dimm();
  Rng rng(3);
  for (int i = 0; i < 100000; ++i) {
    const uint64_t a = rng.below(g.capacity());
    EXPECT_EQ(g.unmap(g.map(a)), a);
  }
}

TEST(RowNeighbors, Edges) {
  const auto g = tiny();
  auto [lo0, hi0] = g.row_neighbors(DramCoord{0, 0, 1, 0, 0});
  EXPECT_FALSE(lo0);
  ASSERT_TRUE(hi0);
  EXPECT_EQ(hi0->row, 1u);
  EXPECT_EQ(hi0->bank, 1u);
  auto [lo1, hi1] = g.row_neighbors(DramCoord{0, 0, 0, 2, 0});
  ASSERT_TRUE(lo1 && hi1);
  EXPECT_EQ(lo1->row, 1u);
  EXPECT_EQ(hi1->row, 3u);
  auto [lo3, hi3] = g.row_neighbors(DramCoord{0, 0, 0, 3, 0});
  ASSERT_TRUE(lo3);
  EXPECT_EQ(lo3->row, 2u);
  EXPECT_FALSE(hi3);
}

class HammerTest : public ::testing::Test {
 protected:
  DramGeometry g = sandy_bridge_dual_dimm();
  PhysicalMemory mem{g.capacity()};
  Rng rng{11};

  uint64_t addr(uint32_t bank, uint32_t row, uint32_t column = 0) const {
    return g.unmap(DramCoord{0, 0, bank, row, column});
  }
};

TEST_F(HammerTest, DifferentBanksNeverFlip) {
  VulnerabilityMap v(VulnerabilityProfile{1.0, 64, 1.0, 0.5}, 1, g.row_size());
  DramModel model(g, v);
  const std::vector<uint64_t> aggr{addr(0, 100), addr(1, 102)};
  EXPECT_TRUE(model.hammer(aggr, 10'000'000, HammerMode::single_sided, rng, mem).empty());
}

TEST_F(HammerTest, DoubleSidedFlipsExactlyTheVulnerableCell) {
  VulnerabilityMap v;
  const RowKey victim{0, 0, 3, 50};
  v.add_cell(victim, VulnerableCell{200, 5, 1.0, FlipDirection::zero_to_one});
  DramModel model(g, v);
  const std::vector<uint64_t> aggr{addr(3, 49), addr(3, 51)};
  const auto flips = model.hammer(aggr, 500'000, HammerMode::double_sided, rng, mem);
  ASSERT_EQ(flips.size(), 1u);
  EXPECT_EQ(flips[0].address, addr(3, 50, 200));
  EXPECT_EQ(flips[0].bit, 5);
  EXPECT_TRUE(flips[0].to_one);
  EXPECT_TRUE(mem.get_bit(addr(3, 50, 200), 5));
  EXPECT_EQ(model.bank_state(g.bank_id(RowKey{0, 0, 3, 49})).activation_counts.at(49), 500'000u);
}

TEST_F(HammerTest, DirectionGatesFlips) {
  VulnerabilityMap v;
  v.add_cell(RowKey{0, 0, 3, 50}, VulnerableCell{0, 0, 1.0, FlipDirection::one_to_zero});
  DramModel model(g, v);
  const std::vector<uint64_t> aggr{addr(3, 49), addr(3, 51)};
  EXPECT_TRUE(model.hammer(aggr, 500'000, HammerMode::double_sided, rng, mem).empty());
}

TEST_F(HammerTest, DoubleSidedRequiresSandwich) {
  DramModel model(g, VulnerabilityMap{});
  const std::vector<uint64_t> bad{addr(3, 49), addr(3, 52)};
  EXPECT_THROW(model.hammer(bad, 1, HammerMode::double_sided, rng, mem), InvalidArgument);
  const std::vector<uint64_t> other_bank{addr(3, 49), addr(4, 51)};
  EXPECT_THROW(model.hammer(other_bank, 1, HammerMode::double_sided, rng, mem), InvalidArgument);
  const std::vector<uint64_t> none;
  EXPECT_THROW(model.hammer(none, 1, HammerMode::single_sided, rng, mem), InvalidArgument);
}

TEST_F(HammerTest, ModeMultipliersOrderFlipRates) {
  const RowKey victim{0, 0, 2, 21};
  auto rate = [&](HammerMode mode, std::vector<uint64_t> aggr) {
    int flipped = 0;
    for (int i = 0; i < 2000; ++i) {
      PhysicalMemory m(g.capacity());
      VulnerabilityMap v;
      v.add_cell(victim, VulnerableCell{8, 1, 0.8, FlipDirection::zero_to_one});
      DramModel model(g, v);
      flipped += !model.hammer(aggr, 500'000, mode, rng, m).empty();
    }
    return flipped / 2000.0;
  };
  const double ds = rate(HammerMode::double_sided, {addr(2, 20), addr(2, 22)});
  const double ss = rate(HammerMode::single_sided, {addr(2, 20), addr(2, 300)});
  const double ol = rate(HammerMode::one_location, {addr(2, 20)});
  EXPECT_NEAR(ds, 0.8, 0.04);
  EXPECT_NEAR(ss, 0.4, 0.04);
  EXPECT_NEAR(ol, 0.2, 0.04);
}

TEST_F(HammerTest, SingleSidedNeedsAConflictingPartner) {
  VulnerabilityMap v;
  v.add_cell(RowKey{0, 0, 2, 21}, VulnerableCell{8, 1, 1.0, FlipDirection::zero_to_one});
  DramModel model(g, v, HammerConfig{500'000, 1.0, 1.0, 1.0});
  const std::vector<uint64_t> same_row{addr(2, 20, 0), addr(2, 20, 64)};
  EXPECT_TRUE(model.hammer(same_row, 500'000, HammerMode::single_sided, rng, mem).empty());
  const std::vector<uint64_t> partner{addr(2, 20), addr(2, 900)};
  EXPECT_EQ(model.hammer(partner, 500'000, HammerMode::single_sided, rng, mem).size(), 1u);
}

TEST_F(HammerTest, FlipsStayInRowsAdjacentToAggressors) {
  VulnerabilityMap v(VulnerabilityProfile{0.5, 16, 1.0, 0.5}, 5, g.row_size());
  DramModel model(g, v);
  Rng pick(99);
  for (int i = 0; i < 300; ++i) {
    const uint32_t bank = static_cast<uint32_t>(pick.below(8));
    const uint32_t r1 = static_cast<uint32_t>(1 + pick.below(1000));
    const uint32_t r2 = static_cast<uint32_t>(1 + pick.below(1000));
    const std::vector<uint64_t> aggr{addr(bank, r1), addr(bank, r2)};
    for (const auto& f : model.hammer(aggr, 500'000, HammerMode::single_sided, rng, mem)) {
      const RowKey k = g.row_of(f.address);
      EXPECT_EQ(k.bank, bank);
      EXPECT_EQ(k.dimm, 0u);
      const bool near1 = k.row + 1 == r1 || k.row == r1 + 1;
      const bool near2 = k.row + 1 == r2 || k.row == r2 + 1;
      EXPECT_TRUE(near1 || near2);
      EXPECT_EQ(k, f.victim);
    }
  }
}

TEST_F(HammerTest, SeededRunsAreIdentical) {
  auto run = [&](uint64_t seed) {
    PhysicalMemory m(g.capacity());
    DramModel model(g, VulnerabilityMap(VulnerabilityProfile{0.3, 8, 0.5, 0.5}, 21, g.row_size()));
    Rng r(seed);
    std::vector<uint64_t> out;
    for (uint32_t row = 10; row < 200; row += 3) {
      const std::vector<uint64_t> aggr{addr(1, row), addr(1, row + 40)};
      for (const auto& f : model.hammer(aggr, 500'000, HammerMode::single_sided, r, m)) {
        out.push_back(f.address * 8 + f.bit);
      }
    }
    return out;
  };
  const auto a = run(4), b = run(4);
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
}

TEST(Vulnerability, GenerationIsOrderIndependent) {
  const VulnerabilityProfile p{0.5, 4, 1.0, 0.5};
  VulnerabilityMap a(p, 77, 8 * KiB), b(p, 77, 8 * KiB);
  const RowKey r1{0, 1, 2, 3}, r2{1, 0, 5, 900};
  const auto a1 = std::vector<VulnerableCell>(a.cells(r1).begin(), a.cells(r1).end());
  const auto a2 = std::vector<VulnerableCell>(a.cells(r2).begin(), a.cells(r2).end());
  const auto b2 = std::vector<VulnerableCell>(b.cells(r2).begin(), b.cells(r2).end());
  const auto b1 = std::vector<VulnerableCell>(b.cells(r1).begin(), b.cells(r1).end());
  ASSERT_EQ(a1.size(), b1.size());
  ASSERT_EQ(a2.size(), b2.size());
  for (size_t i = 0; i < a1.size(); ++i) EXPECT_EQ(a1[i].column, b1[i].column);
  for (size_t i = 0; i < a2.size(); ++i) EXPECT_EQ(a2[i].column, b2[i].column);
}

TEST(Vulnerability, RejectsBadProbabilities) {
  EXPECT_THROW(VulnerabilityMap(VulnerabilityProfile{1.5, 1, 1.0, 0.5}, 1, 8192), InvalidArgument);
  VulnerabilityMap v;
  EXPECT_THROW(v.add_cell(RowKey{}, VulnerableCell{0, 9, 0.5, FlipDirection::one_to_zero}), InvalidArgument);
}

TEST(RowBuffer, HitsAndConflicts) {
  const auto g = sandy_bridge_dual_dimm();
  DramModel model(g, VulnerabilityMap{});
  const uint64_t a = g.unmap(DramCoord{0, 0, 0, 7, 0});
  const uint64_t b = g.unmap(DramCoord{0, 0, 0, 7, 128});
  const uint64_t c = g.unmap(DramCoord{0, 0, 0, 8, 0});
  EXPECT_FALSE(model.access(a));
  EXPECT_TRUE(model.access(b));
  EXPECT_FALSE(model.access(c));
  EXPECT_EQ(*model.bank_state(0).open_row, 8u);
  EXPECT_EQ(model.total_activations(), 2u);
}

}  // namespace
}  // namespace rowambush::dram
