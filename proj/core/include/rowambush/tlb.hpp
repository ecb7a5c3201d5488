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
#include <vector>

namespace rowambush {

/// Direct-mapped translation cache keyed by virtual page number. Holds whole
/// PTE values, so a cached entry keeps answering after the PTE in memory has
/// changed until flush() is called.
class TlbCache {
 public:
  explicit TlbCache(size_t entries = 2048) : slots_(entries == 0 ? 1 : entries) {}

  std::optional<uint64_t> lookup(uint64_t vpn) {
    const Slot& s = slots_[vpn % slots_.size()];
    if (s.epoch == epoch_ && s.vpn == vpn) {
      ++hits_;
      return s.pte;
    }
    ++misses_;
    return std::nullopt;
  }

  void insert(uint64_t vpn, uint64_t pte) { slots_[vpn % slots_.size()] = Slot{vpn, pte, epoch_}; }

  void invalidate(uint64_t vpn) {
    Slot& s = slots_[vpn % slots_.size()];
    if (s.vpn == vpn) s.epoch = 0;
  }

  void flush() {
    ++epoch_;
    ++flushes_;
  }

  size_t capacity() const { return slots_.size(); }
  uint64_t hits() const { return hits_; }
  uint64_t misses() const { return misses_; }
  uint64_t flushes() const { return flushes_; }

 private:
  struct Slot {
    uint64_t vpn = 0;
    uint64_t pte = 0;
    uint64_t epoch = 0;
  };
  std::vector<Slot> slots_;
  uint64_t epoch_ = 1;
  uint64_t hits_ = 0, misses_ = 0, flushes_ = 0;
};

}  // namespace rowambush
