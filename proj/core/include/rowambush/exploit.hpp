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
#include <span>

#include "rowambush/dram.hpp"
#include "rowambush/os_model.hpp"
#include "rowambush/rng.hpp"
#include "rowambush/timing.hpp"

namespace rowambush::exploit {

enum class Status : uint8_t { none, flippable_only, kernel_privilege, root_privilege };

const char* to_string(Status s);

/// Va maps a sprayed page-table page; writing Va's entry 1 remaps Vb.
struct Takeover {
  uint64_t va = 0;
  uint64_t vb = 0;
};

struct VerifyStats {
  uint64_t mismatches = 0;
  uint64_t probes = 0;
  uint64_t restores = 0;
};

/// Flushes the TLB, finds pages of range whose marker is gone, and probes each
/// one as a page table by writing 0x27 into its entry 1. A probe succeeds when
/// a page at stride 512 from index 1, other than Va and reading the marker
/// before the probe, no longer reads the marker. Failed probes are undone.
std::optional<Takeover> verify_and_take_pt(os::OsModel& os, const os::MappedRange& range,
                                           VerifyStats* stats = nullptr);

struct Escalation {
  bool success = false;
  uint64_t pfns_scanned = 0;
  uint64_t pattern_matches = 0;
  uint64_t decoys_restored = 0;
  std::optional<uint64_t> cred_pfn;
};

/// Walks physical frames in ascending order through Va's entry 1, looks for the
/// six-id pattern through Vb, zeroes the uid of a match and keeps it only if
/// getuid(pid) then reports 0.
Escalation escalate_root(os::OsModel& os, const Takeover& t, uint32_t pid, uint32_t uid);

struct HammerLoopConfig {
  uint64_t rounds_cap = 64;
  uint64_t reps = 500'000;
  uint64_t pair_attempt_cap = 100'000;
  dram::HammerMode mode = dram::HammerMode::single_sided;
  bool escalate = true;
  uint32_t pid = 1;
  uint32_t uid = 1000;
};

struct ExploitOutcome {
  Status status = Status::none;
  std::optional<uint64_t> va;
  std::optional<uint64_t> vb;
  uint64_t flips = 0;
  uint64_t pt_flips = 0;
  uint64_t rounds = 0;
  uint64_t pair_attempts = 0;
  uint64_t false_pairs = 0;
  uint64_t verify_calls = 0;
  bool cap_exceeded = false;
  Escalation escalation;
};

/// Each round: pick a pair from the buffer through the timing channel, hammer
/// it, and when anything flipped run the verification. Stops on takeover or
/// after rounds_cap rounds.
ExploitOutcome hammer_loop(os::OsModel& os, dram::DramModel& dram, const timing::TimingChannel& channel,
                           std::span<const os::BufferPage> pages, const os::MappedRange& range,
                           const HammerLoopConfig& config, Rng& rng);

}  // namespace rowambush::exploit
