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
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rowambush/rng.hpp"

namespace rowambush::dram {

/// One coordinate bit, computed as the XOR of the listed physical-address bits.
using XorFunction = std::vector<unsigned>;

/// Physical-address to DRAM mapping. Each DIMM/rank/bank select bit is an XOR
/// function; the row index is a contiguous bit range at the top of the address.
///
/// Every function has a pivot: its lowest bit below row_lo. Pivots must be
/// distinct and no function may reference another function's pivot; the
/// remaining bits below row_lo form the column (byte offset within the row).
/// Under those rules the map is a bijection and unmap() solves it directly.
struct MappingSpec {
  std::vector<XorFunction> dimm_functions;
  std::vector<XorFunction> rank_functions;
  std::vector<XorFunction> bank_functions;
  unsigned row_lo = 0;
  unsigned row_hi = 0;  // inclusive
};

struct DramCoord {
  uint32_t dimm = 0;
  uint32_t rank = 0;
  uint32_t bank = 0;
  uint32_t row = 0;
  uint32_t column = 0;  // byte offset within the row

  friend bool operator==(const DramCoord&, const DramCoord&) = default;
};

/// Identifies one physical DRAM row: (dimm, rank, bank, row).
struct RowKey {
  uint32_t dimm = 0;
  uint32_t rank = 0;
  uint32_t bank = 0;
  uint32_t row = 0;

  friend bool operator==(const RowKey&, const RowKey&) = default;
  friend auto operator<=>(const RowKey&, const RowKey&) = default;
};

struct RowKeyHash {
  size_t operator()(const RowKey& k) const noexcept;
};

class DramGeometry {
 public:
  /// Throws InvalidArgument when the shape and mapping do not fit together.
  DramGeometry(uint32_t dimms, uint32_t ranks_per_dimm, uint32_t banks_per_rank,
               uint32_t rows_per_bank, uint64_t row_size, MappingSpec mapping);

  uint32_t dimms() const { return dimms_; }
  uint32_t ranks_per_dimm() const { return ranks_per_dimm_; }
  uint32_t banks_per_rank() const { return banks_per_rank_; }
  uint32_t rows_per_bank() const { return rows_per_bank_; }
  uint64_t row_size() const { return row_size_; }
  const MappingSpec& mapping() const { return mapping_; }

  uint64_t capacity() const;
  uint32_t banks_total() const { return dimms_ * ranks_per_dimm_ * banks_per_rank_; }

  /// Bytes covered by one row index across all DIMMs, ranks and banks.
  uint64_t rows_size_per_row_index() const;
  /// Smallest block guaranteed to contain two complete row indices.
  uint64_t target_block_size() const { return 2 * rows_size_per_row_index(); }

  DramCoord map(uint64_t addr) const;
  uint64_t unmap(const DramCoord& c) const;

  RowKey row_of(uint64_t addr) const;
  /// Flat bank id in [0, banks_total()).
  uint32_t bank_id(const RowKey& k) const;

  /// Same-bank rows n-1 and n+1; absent at the bank edges.
  std::pair<std::optional<DramCoord>, std::optional<DramCoord>> row_neighbors(
      const DramCoord& c) const;

  /// Distinct rows touched by the bytes of [addr, addr + len).
  std::vector<RowKey> rows_of_range(uint64_t addr, uint64_t len) const;

  /// Granularity (bytes) at which the row of an address can change.
  uint64_t row_granule() const { return granule_; }

 private:
  uint32_t dimms_, ranks_per_dimm_, banks_per_rank_, rows_per_bank_;
  uint64_t row_size_;
  MappingSpec mapping_;

  struct Compiled {
    uint64_t mask = 0;      // all bits of the function
    uint64_t rest = 0;      // bits except the pivot
    unsigned pivot = 0;
  };
  std::vector<Compiled> dimm_fn_, rank_fn_, bank_fn_;
  std::vector<unsigned> column_bits_;
  uint64_t row_mask_ = 0;
  uint64_t granule_ = 0;
  std::vector<unsigned> page_sel_bits_;  // selector bits below the page size
};

/// Rows sized like the Dell Latitude E6420 platform: two DIMMs, two ranks per
/// DIMM, eight banks per rank, 32K rows of 8 KiB, DIMM select on bit 6 and row
/// index on bits 18..32.
DramGeometry sandy_bridge_dual_dimm();
MappingSpec sandy_bridge_mapping();

// --- vulnerability -----------------------------------------------------------

enum class FlipDirection : uint8_t { one_to_zero, zero_to_one };

struct VulnerableCell {
  uint32_t column = 0;  // byte offset within row
  uint8_t bit = 0;      // 0..7
  double probability = 1.0;
  FlipDirection direction = FlipDirection::one_to_zero;
};

/// Parameters for the lazily generated part of a vulnerability map. Each row
/// is weak with weak_row_probability; a weak row carries cells_per_weak_row
/// cells at uniformly random positions.
struct VulnerabilityProfile {
  double weak_row_probability = 0.0;
  uint32_t cells_per_weak_row = 0;
  double cell_probability = 1.0;
  double one_to_zero_fraction = 0.5;
};

/// Sparse per-cell flip probabilities under one standard hammer dose. Cells
/// can be added explicitly or drawn from a profile; drawn cells depend only on
/// (seed, row), so generation order never changes the map.
class VulnerabilityMap {
 public:
  VulnerabilityMap() = default;
  VulnerabilityMap(VulnerabilityProfile profile, uint64_t seed, uint64_t row_size);

  void add_cell(const RowKey& row, const VulnerableCell& cell);
  std::span<const VulnerableCell> cells(const RowKey& row) const;

  const VulnerabilityProfile& profile() const { return profile_; }

 private:
  VulnerabilityProfile profile_{};
  uint64_t seed_ = 0;
  uint64_t row_size_ = 0;
  bool generated_ = false;
  mutable std::unordered_map<RowKey, std::vector<VulnerableCell>, RowKeyHash> rows_;
};

// --- hammering ---------------------------------------------------------------

enum class HammerMode : uint8_t { double_sided, single_sided, one_location };

const char* to_string(HammerMode m);

struct HammerConfig {
  /// Activations of an adjacent aggressor that deliver one full dose.
  uint64_t dose_activations = 500'000;
  double double_sided_multiplier = 1.0;
  double single_sided_multiplier = 0.5;
  double one_location_multiplier = 0.25;
};

/// Bit-addressable backing store for DRAM contents.
class CellStore {
 public:
  virtual ~CellStore() = default;
  virtual bool get_bit(uint64_t addr, unsigned bit) const = 0;
  virtual void set_bit(uint64_t addr, unsigned bit, bool value) = 0;
};

struct InjectedFlip {
  uint64_t address = 0;
  uint8_t bit = 0;
  bool to_one = false;
  RowKey victim{};
};

struct BankState {
  std::optional<uint32_t> open_row;
  std::unordered_map<uint32_t, uint64_t> activation_counts;
};

/// DRAM geometry plus per-bank row-buffer state and the flip model.
class DramModel {
 public:
  DramModel(DramGeometry geometry, VulnerabilityMap vulns, HammerConfig config = {});

  const DramGeometry& geometry() const { return geometry_; }
  const VulnerabilityMap& vulnerabilities() const { return vulns_; }
  VulnerabilityMap& vulnerabilities() { return vulns_; }
  const HammerConfig& config() const { return config_; }

  /// One access; returns true on a row-buffer hit.
  bool access(uint64_t addr);

  /// Hammers the aggressors reps times each and applies flips to the store.
  /// Only rows adjacent (same bank) to an effective aggressor can flip. Under
  /// single_sided an aggressor is effective only when another aggressor sits
  /// in a different row of the same bank, since nothing else would close its
  /// row buffer.
  std::vector<InjectedFlip> hammer(std::span<const uint64_t> aggressors, uint64_t reps,
                                   HammerMode mode, Rng& rng, CellStore& store);

  const BankState& bank_state(uint32_t bank_id) const { return banks_.at(bank_id); }
  uint64_t total_activations() const { return total_activations_; }

 private:
  void activate(const RowKey& row, uint64_t count);

  DramGeometry geometry_;
  VulnerabilityMap vulns_;
  HammerConfig config_;
  std::vector<BankState> banks_;
  uint64_t total_activations_ = 0;
};

}  // namespace rowambush::dram
