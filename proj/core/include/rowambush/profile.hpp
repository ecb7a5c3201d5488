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
#include <string>

#include "rowambush/ambush.hpp"
#include "rowambush/dram.hpp"
#include "rowambush/exploit.hpp"
#include "rowambush/timing.hpp"

namespace rowambush {

/// Everything that describes one simulated machine and its workload.
struct MachineProfile {
  std::string name;

  uint32_t dimms = 2;
  uint32_t ranks_per_dimm = 2;
  uint32_t banks_per_rank = 8;
  uint32_t rows_per_bank = 32 * 1024;
  uint64_t row_size = 8 * KiB;
  dram::MappingSpec mapping = dram::sandy_bridge_mapping();

  uint64_t kernel_bytes = 512 * MiB;
  /// Free kernel memory left in small blocks by the background workload.
  uint64_t residue_bytes = 56 * MiB;
  double preload_free_fraction = 0.5;
  uint64_t fresh_small_block_bytes = 0;
  bool refresh_on_recheck = true;
  uint64_t fresh_drain_cap_bytes = 16 * MiB;

  timing::ChannelModel channel;
  dram::VulnerabilityProfile vulnerability;
  dram::HammerConfig hammer;
  exploit::HammerLoopConfig attack;
  ambush::DriverSizing drivers;

  uint64_t video_threshold = 88 * MiB;
  uint64_t sg_threshold = 109 * MiB;

  /// Exhaustion baselines stop once free memory falls to this fraction.
  double oom_watermark = 0.007;
  uint32_t decoy_creds = 1;

  dram::DramGeometry geometry() const;
  /// Throws ConfigError when the profile is not self-consistent.
  void validate() const;
};

MachineProfile dell_e6420_profile();
MachineProfile lenovo_t420_profile();
/// "dell" / "lenovo" (or their full names); throws ConfigError otherwise.
MachineProfile builtin_profile(const std::string& name);

/// Reads an INI profile. The optional [profile] base key names a built-in
/// profile to start from; every other key overrides it.
MachineProfile load_profile(const std::string& path);
MachineProfile parse_profile(const std::string& text);
std::string format_profile(const MachineProfile& p);

}  // namespace rowambush
