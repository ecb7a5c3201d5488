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
#include "rowambush/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "rowambush/ambush.hpp"
#include "rowambush/error.hpp"
#include "rowambush/timing.hpp"
#include "rowambush/workload.hpp"

namespace rowambush::harness {

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::ambush: return "ambush";
    case Strategy::spray: return "spray";
    case Strategy::feng_shui: return "feng_shui";
  }
  return "?";
}

std::optional<Strategy> parse_strategy(const std::string& s) {
  if (s == "ambush") return Strategy::ambush;
  if (s == "spray") return Strategy::spray;
  if (s == "feng_shui") return Strategy::feng_shui;
  return std::nullopt;
}

uint64_t trial_seed(uint64_t seed, uint64_t i) { return derive_seed(seed, i); }

namespace {

constexpr uint32_t kAttackerPid = 1;

// Takes whole free blocks until free memory would drop below the watermark.
// largest_first walks orders downwards, otherwise upwards.
uint64_t exhaust(buddy::BuddyZone& zone, uint64_t floor_pages, bool largest_first) {
  uint64_t taken = 0;
  const int top = static_cast<int>(zone.max_order());
  for (int step = 0; step <= top; ++step) {
    const unsigned order = static_cast<unsigned>(largest_first ? top - step : step);
    const uint64_t size = uint64_t{1} << order;
    while (!zone.free_list(order).empty() && zone.free_pages() >= floor_pages + size) {
      zone.allocate(order, buddy::Owner::user_other);
      taken += size;
    }
  }
  return taken;
}

}  // namespace

TrialReport run_trial(const MachineProfile& profile, const TrialConfig& config, uint64_t seed) {
  profile.validate();
  const dram::DramGeometry geometry = profile.geometry();

  TrialReport r;
  r.seed = seed;
  r.strategy = config.strategy;
  r.driver = config.driver;
  r.mitigation = config.mitigation;
  r.threshold_bytes = config.threshold.value_or(config.driver == os::Driver::video ? profile.video_threshold
                                                                                     : profile.sg_threshold);

  os::OsConfig oc;
  oc.kernel_bytes = profile.kernel_bytes;
  oc.vma_limit = profile.drivers.vma_limit;
  oc.video_max_chunks = profile.drivers.video_chunks;
  oc.video_chunk_bytes = profile.drivers.video_chunk_bytes;
  oc.sg_max_bytes = std::max(oc.sg_max_bytes, profile.drivers.sg_bytes);
  oc.guard_device_buffers = config.mitigation;
  os::OsModel os(geometry, oc, derive_seed(seed, 1));

  const unsigned torder = ambush::target_order(geometry);
  Rng workload_rng(derive_seed(seed, 2));
  buddy::Preload preload =
      buddy::preload_kernel(os.allocator(), profile.residue_bytes, profile.preload_free_fraction, torder,
                            workload_rng);
  for (uint32_t i = 0; i < profile.decoy_creds; ++i) os.plant_cred(kAttackerPid + 1 + i, profile.attack.uid);
  os.plant_cred(kAttackerPid, profile.attack.uid);

  auto& kernel = os.allocator().zone(buddy::PartitionKind::kernel);
  auto& user = os.allocator().zone(buddy::PartitionKind::user);
  r.available_bytes = (kernel.free_pages() + user.free_pages()) * kPageSize;
  r.small_block_bytes = ambush::small_block_bytes(os);

  if (config.strategy != Strategy::ambush) {
    const bool largest_first = config.strategy == Strategy::feng_shui;
    uint64_t taken = 0;
    for (auto* zone : {&kernel, &user}) {
      const auto floor_pages =
          static_cast<uint64_t>(std::ceil(profile.oom_watermark * static_cast<double>(zone->free_pages())));
      taken += exhaust(*zone, floor_pages, largest_first);
    }
    r.footprint_bytes = taken * kPageSize;
    return r;
  }

  const ambush::AmbushPlan plan = ambush::plan(r.threshold_bytes, config.driver, profile.drivers);
  ambush::AmbushOptions opts;
  opts.refresh_on_recheck = profile.refresh_on_recheck;
  opts.fresh_drain_cap_bytes = profile.fresh_drain_cap_bytes;
  if (profile.fresh_small_block_bytes > 0) {
    opts.after_drain = [&] {
      buddy::release_fresh_small_blocks(os.allocator(), preload, profile.fresh_small_block_bytes, torder,
                                        workload_rng);
    };
  }
  ambush::Ambusher ambusher(os, plan, opts);
  const ambush::Placement placement = ambusher.run();
  const ambush::Adjacency adj = ambush::verify_adjacency(placement, os);

  r.footprint_bytes = placement.peak_footprint_bytes;
  r.adjacency = adj.adjacent;
  r.adjacent_pairs = adj.pairs.size();
  r.drained_pt_pages = placement.drained_pt_pages + placement.fresh_pt_pages;
  r.stuffed_pt_pages = placement.stuffed_pt_pages;
  r.pt_pages = placement.pt_pages();
  for (const auto& iso : placement.buffer.isolation) {
    r.guard_cost_per_buffer_bytes = iso.guard_row_cost_bytes;
    r.reserved_guard_bytes += iso.reserved_guard_bytes;
  }

  if (config.hammer) {
    dram::DramModel model(geometry,
                          dram::VulnerabilityMap(profile.vulnerability, derive_seed(seed, 3), geometry.row_size()),
                          profile.hammer);
    timing::TimingChannel channel(geometry, profile.channel);
    exploit::HammerLoopConfig hc = profile.attack;
    hc.pid = kAttackerPid;
    Rng hammer_rng(derive_seed(seed, 4));
    const auto pages = placement.buffer.pages();
    const exploit::ExploitOutcome out =
        exploit::hammer_loop(os, model, channel, pages, placement.mapped, hc, hammer_rng);
    r.flips = out.flips;
    r.pt_flips = out.pt_flips;
    r.status = out.status;
    r.rounds = out.rounds;
    r.pair_attempts = out.pair_attempts;
    r.activations = model.total_activations();
  }
  return r;
}

Summary summarize(std::span<const TrialReport> trials) {
  Summary s;
  s.trials = trials.size();
  double footprint = 0, available = 0, rounds = 0, activations = 0;
  for (const auto& t : trials) {
    s.adjacency += t.adjacency;
    s.flippable += t.pt_flips > 0;
    s.exploitable += t.status >= exploit::Status::kernel_privilege;
    s.root += t.status == exploit::Status::root_privilege;
    s.max_footprint_bytes = std::max(s.max_footprint_bytes, t.footprint_bytes);
    s.guard_cost_per_buffer_bytes = std::max(s.guard_cost_per_buffer_bytes, t.guard_cost_per_buffer_bytes);
    footprint += static_cast<double>(t.footprint_bytes);
    available += static_cast<double>(t.available_bytes);
    rounds += static_cast<double>(t.rounds);
    activations += static_cast<double>(t.activations);
  }
  if (s.trials) {
    const double n = static_cast<double>(s.trials);
    s.mean_footprint_bytes = footprint / n;
    s.mean_available_bytes = available / n;
    s.mean_rounds = rounds / n;
    s.mean_activations = activations / n;
  }
  return s;
}

Aggregate run_trials(const MachineProfile& profile, const TrialConfig& config, uint64_t n, uint64_t seed,
                     unsigned jobs) {
  Aggregate agg;
  agg.profile = profile.name;
  agg.config = config;
  agg.seed = seed;
  agg.trials.resize(n);
  profile.validate();

  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<uint64_t>(jobs, std::max<uint64_t>(n, 1)));

  std::atomic<uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (uint64_t i = next++; i < n; i = next++) {
      try {
        agg.trials[i] = run_trial(profile, config, trial_seed(seed, i));
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  agg.summary = summarize(agg.trials);
  return agg;
}

Aggregate evaluate_mitigation(const MachineProfile& profile, os::Driver driver, uint64_t n, uint64_t seed,
                              unsigned jobs) {
  TrialConfig c;
  c.driver = driver;
  c.mitigation = true;
  return run_trials(profile, c, n, seed, jobs);
}

}  // namespace rowambush::harness
