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

#include <cmath>

#include "rowambush/error.hpp"
#include "rowambush/profile.hpp"
#include "rowambush/timing.hpp"

namespace rowambush::timing {
namespace {

const dram::DramGeometry kGeom = dram::sandy_bridge_dual_dimm();

os::BufferPage page_at(uint32_t bank, uint32_t row, uint32_t col = 0) {
  const uint64_t pa = kGeom.unmap(dram::DramCoord{0, 0, bank, row, col});
  return os::BufferPage{0x7000'0000'0000ULL + pa, pa};
}

double high_rate(const TimingChannel& ch, bool drsb, int n, uint64_t seed) {
  Rng rng(seed);
  int high = 0;
  for (int i = 0; i < n; ++i) high += ch.draw_cycles(drsb, rng) >= ch.model().threshold_cycles;
  return static_cast<double>(high) / n;
}

TEST(Channel, GroundTruth) {
  TimingChannel ch(kGeom, ChannelModel{});
  EXPECT_TRUE(ch.is_drsb(page_at(2, 10).paddr, page_at(2, 11).paddr));
  EXPECT_FALSE(ch.is_drsb(page_at(2, 10).paddr, page_at(2, 10, 4096).paddr));
  EXPECT_FALSE(ch.is_drsb(page_at(2, 10).paddr, page_at(3, 11).paddr));
}

TEST(Channel, DellRates) {
  TimingChannel ch(kGeom, dell_e6420_profile().channel);
  EXPECT_NEAR(high_rate(ch, true, 20000, 1), 0.927, 0.01);
  EXPECT_NEAR(1.0 - high_rate(ch, false, 20000, 2), 0.974, 0.01);
}

TEST(Channel, CertainSideNeverCrosses) {
  TimingChannel ch(kGeom, lenovo_t420_profile().channel);
  EXPECT_EQ(high_rate(ch, true, 20000, 3), 1.0);
  EXPECT_NEAR(1.0 - high_rate(ch, false, 20000, 4), 0.990, 0.005);
}

TEST(Channel, SampleClassifiesAgainstThreshold) {
  TimingChannel ch(kGeom, ChannelModel{});
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const auto s = ch.sample(page_at(1, 5), page_at(1, 9), rng);
    EXPECT_TRUE(s.truth_drsb);
    EXPECT_EQ(s.classified_drsb, s.cycles >= 360);
    EXPECT_GT(s.cycles, 0u);
  }
}

TEST(Channel, AttemptsFollowAGeometricLaw) {
  const ChannelModel m{};
  TimingChannel ch(kGeom, m);
  // Two DRSB pages and two pages alone in their banks: 2 of 12 ordered pairs are DRSB.
  const std::vector<os::BufferPage> pages{page_at(0, 1), page_at(0, 2), page_at(3, 1), page_at(5, 1)};
  const double q = 2.0 / 12.0;
  const double p_hit = q * m.p_high_given_drsb + (1 - q) * (1 - m.p_low_given_nondrsb);
  Rng rng(6);
  double total = 0;
  int truth = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto sel = ch.select_hammer_pair(pages, rng, 1'000'000);
    total += static_cast<double>(sel.attempts);
    truth += sel.truth_drsb;
  }
  const double expected = 1.0 / p_hit;
  EXPECT_NEAR(total / n, expected, 0.05 * expected);
  EXPECT_NEAR(static_cast<double>(truth) / n, q * m.p_high_given_drsb / p_hit, 0.02);
}

TEST(Channel, CapExceeded) {
  ChannelModel m;
  m.p_low_given_nondrsb = 1.0;
  TimingChannel ch(kGeom, m);
  const std::vector<os::BufferPage> same_row{page_at(0, 1, 0), page_at(0, 1, 4096)};
  Rng rng(7);
  EXPECT_THROW(ch.select_hammer_pair(same_row, rng, 1000), AttemptCapExceeded);
  const std::vector<os::BufferPage> one{page_at(0, 1)};
  EXPECT_THROW(ch.select_hammer_pair(one, rng, 10), InvalidArgument);
}

TEST(Channel, RejectsBadModels) {
  ChannelModel m;
  m.p_high_given_drsb = 1.2;
  EXPECT_THROW(TimingChannel(kGeom, m), InvalidArgument);
  m = ChannelModel{};
  m.sigma_drsb = 0;
  EXPECT_THROW(TimingChannel(kGeom, m), InvalidArgument);
}

}  // namespace
}  // namespace rowambush::timing
