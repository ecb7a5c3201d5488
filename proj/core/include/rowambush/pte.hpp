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

namespace rowambush {

/// x86-64 last-level page-table entry. Bits outside present/writable/user/PFN
/// are carried through untouched so encode(decode(v)) == v.
struct PteEntry {
  static constexpr uint64_t kPresent = 1ULL << 0;
  static constexpr uint64_t kWritable = 1ULL << 1;
  static constexpr uint64_t kUser = 1ULL << 2;
  static constexpr uint64_t kAccessed = 1ULL << 5;
  static constexpr unsigned kPfnShift = 12;
  static constexpr uint64_t kPfnMask = ((1ULL << 40) - 1) << kPfnShift;
  static constexpr uint64_t kOtherMask = ~(kPfnMask | kPresent | kWritable | kUser);
  /// Flags the kernel sets on a touched, writable user mapping.
  static constexpr uint64_t kUserRw = kPresent | kWritable | kUser | kAccessed;  // 0x27

  bool present = false;
  bool writable = false;
  bool user = false;
  uint64_t pfn = 0;
  uint64_t other = 0;

  static constexpr PteEntry decode(uint64_t v) {
    PteEntry e;
    e.present = v & kPresent;
    e.writable = v & kWritable;
    e.user = v & kUser;
    e.pfn = (v & kPfnMask) >> kPfnShift;
    e.other = v & kOtherMask;
    return e;
  }

  constexpr uint64_t encode() const {
    return (present ? kPresent : 0) | (writable ? kWritable : 0) | (user ? kUser : 0) |
           ((pfn << kPfnShift) & kPfnMask) | (other & kOtherMask);
  }

  static constexpr uint64_t make(uint64_t pfn, uint64_t flags = kUserRw) {
    return ((pfn << kPfnShift) & kPfnMask) | (flags & ~kPfnMask);
  }

  friend constexpr bool operator==(const PteEntry&, const PteEntry&) = default;
};

}  // namespace rowambush
