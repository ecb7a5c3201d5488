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
#include <benchmark/benchmark.h>

#include "rowambush/buddy.hpp"
#include "rowambush/dram.hpp"
#include "rowambush/harness.hpp"
#include "rowambush/os_model.hpp"
#include "rowambush/phys_mem.hpp"
#include "rowambush/profile.hpp"

using namespace rowambush;

static void BM_MapAddress(benchmark::State& state) {
  const auto g = dram::sandy_bridge_dual_dimm();
  uint64_t a = 0;
  for (auto _ : state) {
    a = (a + 0x9e3779b97f4a7c15ULL) % g.capacity();
    benchmark::DoNotOptimize(g.map(a));
  }
}
BENCHMARK(BM_MapAddress);

static void BM_RowsOfPage(benchmark::State& state) {
  const auto g = dram::sandy_bridge_dual_dimm();
  uint64_t pfn = 0;
  for (auto _ : state) {
    pfn = (pfn + 7919) % (g.capacity() / kPageSize);
    benchmark::DoNotOptimize(g.rows_of_range(pfn * kPageSize, kPageSize));
  }
}
BENCHMARK(BM_RowsOfPage);

static void BM_BuddyAllocFree(benchmark::State& state) {
  buddy::BuddyZone zone(buddy::PartitionKind::kernel, 0, 1u << 17);
  Rng rng(2);
  std::vector<buddy::Block> live;
  for (auto _ : state) {
    if (live.size() < 4096 && (live.empty() || rng.below(2))) {
      live.push_back(zone.allocate(static_cast<unsigned>(rng.below(4)), buddy::Owner::kernel_other));
    } else {
      const size_t i = rng.below(live.size());
      zone.free(live[i]);
      live[i] = live.back();
      live.pop_back();
    }
  }
}
BENCHMARK(BM_BuddyAllocFree);

static void BM_HammerRound(benchmark::State& state) {
  const auto g = dram::sandy_bridge_dual_dimm();
  PhysicalMemory mem(g.capacity());
  dram::DramModel model(g, dram::VulnerabilityMap(dell_e6420_profile().vulnerability, 3, g.row_size()));
  Rng rng(3);
  for (auto _ : state) {
    const uint32_t bank = static_cast<uint32_t>(rng.below(8));
    const std::vector<uint64_t> aggr{g.unmap({0, 0, bank, static_cast<uint32_t>(1 + rng.below(30000)), 0}),
                                     g.unmap({0, 0, bank, static_cast<uint32_t>(1 + rng.below(30000)), 0})};
    benchmark::DoNotOptimize(model.hammer(aggr, 500'000, dram::HammerMode::single_sided, rng, mem));
  }
}
BENCHMARK(BM_HammerRound);

static void BM_ScanMarkers(benchmark::State& state) {
  os::OsModel os(dram::sandy_bridge_dual_dimm(), os::OsConfig{}, 4);
  os.create_tmp_file(2 * MiB);
  os.write_markers();
  for (int64_t i = 0; i < state.range(0); ++i) os.mmap_primitive();
  const auto range = os.mapped_range();
  for (auto _ : state) {
    os.flush_tlb();
    benchmark::DoNotOptimize(os.scan_markers(range));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(range.pages()));
}
BENCHMARK(BM_ScanMarkers)->Arg(64)->Arg(1024);

static void BM_Trial(benchmark::State& state) {
  const auto prof = dell_e6420_profile();
  harness::TrialConfig c;
  c.hammer = state.range(0) != 0;
  uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(harness::run_trial(prof, c, seed++));
}
BENCHMARK(BM_Trial)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
