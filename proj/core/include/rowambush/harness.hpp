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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rowambush/exploit.hpp"
#include "rowambush/os_model.hpp"
#include "rowambush/profile.hpp"

namespace rowambush::harness {

enum class Strategy : uint8_t { ambush, spray, feng_shui };

const char* to_string(Strategy s);
std::optional<Strategy> parse_strategy(const std::string& s);

struct TrialConfig {
  Strategy strategy = Strategy::ambush;
  os::Driver driver = os::Driver::video;
  /// Defaults to the profile's threshold for the driver.
  std::optional<uint64_t> threshold;
  bool mitigation = false;
  bool hammer = true;
};

struct TrialReport {
  uint64_t seed = 0;
  Strategy strategy = Strategy::ambush;
  os::Driver driver = os::Driver::video;
  bool mitigation = false;
  uint64_t threshold_bytes = 0;
  uint64_t available_bytes = 0;
  uint64_t footprint_bytes = 0;
  bool adjacency = false;
  uint64_t adjacent_pairs = 0;
  uint64_t small_block_bytes = 0;
  uint64_t drained_pt_pages = 0;
  uint64_t stuffed_pt_pages = 0;
  uint64_t pt_pages = 0;
  uint64_t flips = 0;
  uint64_t pt_flips = 0;
  exploit::Status status = exploit::Status::none;
  uint64_t rounds = 0;
  uint64_t pair_attempts = 0;
  uint64_t activations = 0;
  uint64_t guard_cost_per_buffer_bytes = 0;
  uint64_t reserved_guard_bytes = 0;

  friend bool operator==(const TrialReport&, const TrialReport&) = default;
};

TrialReport run_trial(const MachineProfile& profile, const TrialConfig& config, uint64_t seed);

struct Summary {
  uint64_t trials = 0;
  uint64_t adjacency = 0;
  uint64_t flippable = 0;   // at least one flip inside a page-table page
  uint64_t exploitable = 0; // page-table takeover
  uint64_t root = 0;
  uint64_t max_footprint_bytes = 0;
  double mean_footprint_bytes = 0;
  double mean_available_bytes = 0;
  uint64_t guard_cost_per_buffer_bytes = 0;
  double mean_rounds = 0;
  double mean_activations = 0;

  double rate(uint64_t count) const { return trials ? static_cast<double>(count) / trials : 0.0; }
};

Summary summarize(std::span<const TrialReport> trials);

struct Aggregate {
  std::string profile;
  TrialConfig config;
  uint64_t seed = 0;
  std::vector<TrialReport> trials;  // ordered by trial index
  Summary summary;
};

/// Seed of trial i in a batch started from seed.
uint64_t trial_seed(uint64_t seed, uint64_t i);

/// n independent trials; jobs worker threads (0 = hardware concurrency).
/// Results do not depend on jobs.
Aggregate run_trials(const MachineProfile& profile, const TrialConfig& config, uint64_t n, uint64_t seed,
                     unsigned jobs = 1);

/// Ambush with guarded device buffers.
Aggregate evaluate_mitigation(const MachineProfile& profile, os::Driver driver, uint64_t n, uint64_t seed,
                              unsigned jobs = 1);

// --- reports ---

extern const std::vector<std::string> kCsvColumns;

void write_csv(std::ostream& out, std::span<const TrialReport> trials);
/// Throws ConfigError on a malformed stream.
std::vector<TrialReport> read_csv(std::istream& in);
void write_text(std::ostream& out, const Aggregate& aggregate);

}  // namespace rowambush::harness
