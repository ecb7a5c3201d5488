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
#include "rowambush/dram.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <set>
#include <sstream>

#include "rowambush/error.hpp"
#include "rowambush/units.hpp"

namespace rowambush::dram {

size_t RowKeyHash::operator()(const RowKey& k) const noexcept {
  uint64_t v = (uint64_t{k.dimm} << 56) ^ (uint64_t{k.rank} << 48) ^
               (uint64_t{k.bank} << 32) ^ k.row;
  return static_cast<size_t>(mix64(v));
}

namespace {

// Folding parity; avoids a libgcc call when the target lacks popcnt.
unsigned parity(uint64_t v) {
  v ^= v >> 32;
  v ^= v >> 16;
  v ^= v >> 8;
  v ^= v >> 4;
  return (0x6996u >> (v & 0xf)) & 1;
}

}  // namespace

DramGeometry::DramGeometry(uint32_t dimms, uint32_t ranks_per_dimm, uint32_t banks_per_rank,
                           uint32_t rows_per_bank, uint64_t row_size, MappingSpec mapping)
    : dimms_(dimms),
      ranks_per_dimm_(ranks_per_dimm),
      banks_per_rank_(banks_per_rank),
      rows_per_bank_(rows_per_bank),
      row_size_(row_size),
      mapping_(std::move(mapping)) {
  auto fail = [](const std::string& what) { throw InvalidArgument("geometry: " + what); };
  for (uint64_t v : {uint64_t{dimms}, uint64_t{ranks_per_dimm}, uint64_t{banks_per_rank},
                     uint64_t{rows_per_bank}, row_size}) {
    if (!is_pow2(v)) fail("every dimension must be a nonzero power of two");
  }
  if (row_size % kPageSize != 0) fail("row size must be a multiple of the page size");
  if (mapping_.dimm_functions.size() != log2_floor(dimms)) fail("DIMM select function count");
  if (mapping_.rank_functions.size() != log2_floor(ranks_per_dimm)) fail("rank select function count");
  if (mapping_.bank_functions.size() != log2_floor(banks_per_rank)) fail("bank select function count");
  if (mapping_.row_hi < mapping_.row_lo || mapping_.row_hi >= 63) fail("row bit range");
  if (mapping_.row_hi - mapping_.row_lo + 1 != log2_floor(rows_per_bank)) fail("row bit count");

  const unsigned selector_bits = static_cast<unsigned>(
      mapping_.dimm_functions.size() + mapping_.rank_functions.size() +
      mapping_.bank_functions.size());
  if (mapping_.row_lo != log2_floor(row_size) + selector_bits) {
    fail("row_lo must equal log2(row_size) + number of select functions");
  }

  std::set<unsigned> pivots;
  auto compile = [&](const std::vector<XorFunction>& fns, std::vector<Compiled>& out) {
    for (const auto& fn : fns) {
      if (fn.empty()) fail("empty select function");
      Compiled c;
      unsigned lowest = 64;
      for (unsigned b : fn) {
        if (b > mapping_.row_hi) fail("select bit beyond the address width");
        if (c.mask & (uint64_t{1} << b)) fail("duplicate bit in select function");
        c.mask |= uint64_t{1} << b;
        lowest = std::min(lowest, b);
      }
      if (lowest >= mapping_.row_lo) fail("select function needs a bit below the row range");
      if (!pivots.insert(lowest).second) fail("select functions share a pivot bit");
      c.pivot = lowest;
      c.rest = c.mask & ~(uint64_t{1} << lowest);
      out.push_back(c);
    }
  };
  compile(mapping_.dimm_functions, dimm_fn_);
  compile(mapping_.rank_functions, rank_fn_);
  compile(mapping_.bank_functions, bank_fn_);

  uint64_t pivot_mask = 0;
  for (unsigned p : pivots) pivot_mask |= uint64_t{1} << p;
  for (const auto* fns : {&dimm_fn_, &rank_fn_, &bank_fn_}) {
    for (const auto& c : *fns) {
      if (c.rest & pivot_mask) fail("select function references another function's pivot");
    }
  }
  for (unsigned b = 0; b < mapping_.row_lo; ++b) {
    if (!pivots.count(b)) column_bits_.push_back(b);
  }
  row_mask_ = (uint64_t{1} << (mapping_.row_hi - mapping_.row_lo + 1)) - 1;

  unsigned min_bit = mapping_.row_lo;
  for (unsigned p : pivots) min_bit = std::min(min_bit, p);
  for (const auto* fns : {&dimm_fn_, &rank_fn_, &bank_fn_}) {
    for (const auto& c : *fns) min_bit = std::min(min_bit, static_cast<unsigned>(std::countr_zero(c.mask)));
  }
  granule_ = uint64_t{1} << min_bit;
  uint64_t sel = 0;
  for (const auto* fns : {&dimm_fn_, &rank_fn_, &bank_fn_}) {
    for (const auto& f : *fns) sel |= f.mask;
  }
  for (unsigned b = 0; b < kPageShift; ++b) {
    if ((sel >> b) & 1) page_sel_bits_.push_back(b);
  }
}

uint64_t DramGeometry::capacity() const {
  return uint64_t{dimms_} * ranks_per_dimm_ * banks_per_rank_ * rows_per_bank_ * row_size_;
}

uint64_t DramGeometry::rows_size_per_row_index() const {
  const uint64_t banks_per_dimm = uint64_t{banks_per_rank_} * ranks_per_dimm_;
  return uint64_t{dimms_} * banks_per_dimm * row_size_;
}

DramCoord DramGeometry::map(uint64_t addr) const {
  if (addr >= capacity()) {
    std::ostringstream os;
    os << "physical address 0x" << std::hex << addr << " beyond capacity";
    throw AddressOutOfRange(os.str());
  }
  auto select = [addr](const std::vector<Compiled>& fns) {
    uint32_t v = 0;
    for (size_t i = 0; i < fns.size(); ++i) v |= parity(addr & fns[i].mask) << i;
    return v;
  };
  DramCoord c;
  c.dimm = select(dimm_fn_);
  c.rank = select(rank_fn_);
  c.bank = select(bank_fn_);
  c.row = static_cast<uint32_t>((addr >> mapping_.row_lo) & row_mask_);
  uint32_t col = 0;
  for (size_t i = 0; i < column_bits_.size(); ++i) {
    col |= static_cast<uint32_t>((addr >> column_bits_[i]) & 1) << i;
  }
  c.column = col;
  return c;
}

uint64_t DramGeometry::unmap(const DramCoord& c) const {
  if (c.dimm >= dimms_ || c.rank >= ranks_per_dimm_ || c.bank >= banks_per_rank_ ||
      c.row >= rows_per_bank_ || c.column >= row_size_) {
    throw AddressOutOfRange("DRAM coordinate outside the geometry");
  }
  uint64_t addr = uint64_t{c.row} << mapping_.row_lo;
  for (size_t i = 0; i < column_bits_.size(); ++i) {
    addr |= uint64_t{(c.column >> i) & 1u} << column_bits_[i];
  }
  auto solve = [&addr](const std::vector<Compiled>& fns, uint32_t value) {
    for (size_t i = 0; i < fns.size(); ++i) {
      const unsigned want = (value >> i) & 1u;
      addr |= uint64_t{want ^ parity(addr & fns[i].rest)} << fns[i].pivot;
    }
  };
  solve(dimm_fn_, c.dimm);
  solve(rank_fn_, c.rank);
  solve(bank_fn_, c.bank);
  return addr;
}

RowKey DramGeometry::row_of(uint64_t addr) const {
  const DramCoord c = map(addr);
  return RowKey{c.dimm, c.rank, c.bank, c.row};
}

uint32_t DramGeometry::bank_id(const RowKey& k) const {
  return (k.dimm * ranks_per_dimm_ + k.rank) * banks_per_rank_ + k.bank;
}

std::pair<std::optional<DramCoord>, std::optional<DramCoord>> DramGeometry::row_neighbors(
    const DramCoord& c) const {
  std::optional<DramCoord> below, above;
  if (c.row > 0) {
    below = c;
    below->row = c.row - 1;
  }
  if (c.row + 1 < rows_per_bank_) {
    above = c;
    above->row = c.row + 1;
  }
  return {below, above};
}

std::vector<RowKey> DramGeometry::rows_of_range(uint64_t addr, uint64_t len) const {
  std::vector<RowKey> out;
  if (len == 0) return out;
  if (addr % kPageSize == 0 && len % kPageSize == 0 && page_sel_bits_.size() <= 8) {
    // Within a page only the selector bits below the page boundary move the row.
    const size_t combos = size_t{1} << page_sel_bits_.size();
    for (uint64_t page = addr; page < addr + len; page += kPageSize) {
      for (size_t s = 0; s < combos; ++s) {
        uint64_t a = page;
        for (size_t i = 0; i < page_sel_bits_.size(); ++i) a |= uint64_t{(s >> i) & 1} << page_sel_bits_[i];
        RowKey k = row_of(a);
        if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
      }
    }
    return out;
  }
  uint64_t a = addr & ~(granule_ - 1);
  for (; a < addr + len; a += granule_) {
    RowKey k = row_of(a);
    if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
  }
  return out;
}

MappingSpec sandy_bridge_mapping() {
  MappingSpec m;
  m.dimm_functions = {{6}};
  m.rank_functions = {{16, 20}};
  m.bank_functions = {{13, 17}, {14, 18}, {15, 19}};
  m.row_lo = 18;
  m.row_hi = 32;
  return m;
}

DramGeometry sandy_bridge_dual_dimm() {
  return DramGeometry(2, 2, 8, 32 * 1024, 8 * KiB, sandy_bridge_mapping());
}

// --- vulnerability -----------------------------------------------------------

VulnerabilityMap::VulnerabilityMap(VulnerabilityProfile profile, uint64_t seed, uint64_t row_size)
    : profile_(profile), seed_(seed), row_size_(row_size), generated_(true) {
  if (profile.weak_row_probability < 0.0 || profile.weak_row_probability > 1.0 ||
      profile.cell_probability < 0.0 || profile.cell_probability > 1.0 ||
      profile.one_to_zero_fraction < 0.0 || profile.one_to_zero_fraction > 1.0) {
    throw InvalidArgument("vulnerability probabilities must lie in [0, 1]");
  }
}

void VulnerabilityMap::add_cell(const RowKey& row, const VulnerableCell& cell) {
  if (cell.probability < 0.0 || cell.probability > 1.0 || cell.bit > 7) {
    throw InvalidArgument("vulnerable cell out of range");
  }
  cells(row);  // materialize generated cells first so the explicit one is appended
  rows_[row].push_back(cell);
}

std::span<const VulnerableCell> VulnerabilityMap::cells(const RowKey& row) const {
  auto it = rows_.find(row);
  if (it != rows_.end()) return it->second;
  std::vector<VulnerableCell> cells;
  if (generated_ && profile_.cells_per_weak_row > 0 && profile_.weak_row_probability > 0.0) {
    Rng rng(derive_seed(seed_, RowKeyHash{}(row)));
    if (rng.bernoulli(profile_.weak_row_probability)) {
      cells.reserve(profile_.cells_per_weak_row);
      for (uint32_t i = 0; i < profile_.cells_per_weak_row; ++i) {
        VulnerableCell c;
        c.column = static_cast<uint32_t>(rng.below(row_size_));
        c.bit = static_cast<uint8_t>(rng.below(8));
        c.probability = profile_.cell_probability;
        c.direction = rng.bernoulli(profile_.one_to_zero_fraction) ? FlipDirection::one_to_zero
                                                                   : FlipDirection::zero_to_one;
        cells.push_back(c);
      }
    }
  }
  if (cells.empty()) return {};
  auto [pos, _] = rows_.emplace(row, std::move(cells));
  return pos->second;
}

// --- hammering ---------------------------------------------------------------

const char* to_string(HammerMode m) {
  switch (m) {
    case HammerMode::double_sided: return "double_sided";
    case HammerMode::single_sided: return "single_sided";
    case HammerMode::one_location: return "one_location";
  }
  return "?";
}

DramModel::DramModel(DramGeometry geometry, VulnerabilityMap vulns, HammerConfig config)
    : geometry_(std::move(geometry)), vulns_(std::move(vulns)), config_(config) {
  if (config_.dose_activations == 0) throw InvalidArgument("dose must be positive");
  banks_.resize(geometry_.banks_total());
}

bool DramModel::access(uint64_t addr) {
  const RowKey k = geometry_.row_of(addr);
  BankState& b = banks_[geometry_.bank_id(k)];
  const bool hit = b.open_row && *b.open_row == k.row;
  if (!hit) activate(k, 1);
  return hit;
}

void DramModel::activate(const RowKey& row, uint64_t count) {
  BankState& b = banks_[geometry_.bank_id(row)];
  b.open_row = row.row;
  b.activation_counts[row.row] += count;
  total_activations_ += count;
}

std::vector<InjectedFlip> DramModel::hammer(std::span<const uint64_t> aggressors, uint64_t reps,
                                            HammerMode mode, Rng& rng, CellStore& store) {
  if (aggressors.empty()) throw InvalidArgument("hammer needs at least one aggressor");
  std::vector<RowKey> rows;
  rows.reserve(aggressors.size());
  for (uint64_t a : aggressors) rows.push_back(geometry_.row_of(a));

  // Effective aggressor rows, each with the multiplier it applies to its neighbours.
  std::vector<RowKey> effective;
  double multiplier = 0.0;
  switch (mode) {
    case HammerMode::double_sided: {
      if (rows.size() != 2) throw InvalidArgument("double-sided hammering needs two aggressors");
      const RowKey& a = rows[0];
      const RowKey& b = rows[1];
      const bool same_bank = a.dimm == b.dimm && a.rank == b.rank && a.bank == b.bank;
      const uint32_t lo = std::min(a.row, b.row), hi = std::max(a.row, b.row);
      if (!same_bank || hi - lo != 2) {
        throw InvalidArgument("double-sided aggressors must sandwich one victim row");
      }
      effective = {a, b};
      multiplier = config_.double_sided_multiplier;
      break;
    }
    case HammerMode::single_sided: {
      for (size_t i = 0; i < rows.size(); ++i) {
        for (size_t j = 0; j < rows.size(); ++j) {
          const RowKey& a = rows[i];
          const RowKey& b = rows[j];
          if (a.dimm == b.dimm && a.rank == b.rank && a.bank == b.bank && a.row != b.row) {
            if (std::find(effective.begin(), effective.end(), a) == effective.end()) {
              effective.push_back(a);
            }
            break;
          }
        }
      }
      multiplier = config_.single_sided_multiplier;
      break;
    }
    case HammerMode::one_location: {
      if (rows.size() != 1) throw InvalidArgument("one-location hammering takes one aggressor");
      effective = rows;
      multiplier = config_.one_location_multiplier;
      break;
    }
  }

  for (const RowKey& r : rows) activate(r, reps);

  // Victims in deterministic order; a victim flanked on both sides by
  // effective aggressors receives the double-sided dose.
  std::map<RowKey, int> victims;
  for (const RowKey& a : effective) {
    if (a.row > 0) victims[RowKey{a.dimm, a.rank, a.bank, a.row - 1}]++;
    if (a.row + 1 < geometry_.rows_per_bank()) victims[RowKey{a.dimm, a.rank, a.bank, a.row + 1}]++;
  }

  std::vector<InjectedFlip> flips;
  for (const auto& [victim, sides] : victims) {
    if (std::find(rows.begin(), rows.end(), victim) != rows.end() && mode != HammerMode::double_sided) {
      // An aggressor row is refreshed by its own activations.
      continue;
    }
    const double m = sides >= 2 ? config_.double_sided_multiplier
                                : (mode == HammerMode::double_sided ? config_.single_sided_multiplier
                                                                    : multiplier);
    const double dose = std::min(1.0, static_cast<double>(reps) * m /
                                          static_cast<double>(config_.dose_activations));
    for (const VulnerableCell& cell : vulns_.cells(victim)) {
      if (!rng.bernoulli(cell.probability * dose)) continue;
      const uint64_t addr = geometry_.unmap(DramCoord{victim.dimm, victim.rank, victim.bank,
                                                      victim.row, cell.column});
      const bool current = store.get_bit(addr, cell.bit);
      const bool from_one = cell.direction == FlipDirection::one_to_zero;
      if (current != from_one) continue;
      store.set_bit(addr, cell.bit, !current);
      flips.push_back(InjectedFlip{addr, cell.bit, !current, victim});
    }
  }
  return flips;
}

}  // namespace rowambush::dram
