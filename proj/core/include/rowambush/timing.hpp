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
#include <span>

#include "rowambush/dram.hpp"
#include "rowambush/os_model.hpp"
#include "rowambush/rng.hpp"

namespace rowambush::timing {

/// Latency of an alternating access pair. Same-bank different-row pairs draw
/// from one truncated normal, everything else from another; the means are
/// placed so the mass on the expected side of the threshold matches the
/// configured rates.
struct ChannelModel {
  uint32_t threshold_cycles = 360;
  double p_high_given_drsb = 0.927;
  double p_low_given_nondrsb = 0.974;
  double sigma_drsb = 24.0;
  double sigma_nondrsb = 18.0;
  /// Half-width of both distributions, in standard deviations.
  double truncation_sigmas = 5.0;
};

struct LatencySample {
  uint64_t va = 0;
  uint64_t vb = 0;
  uint32_t cycles = 0;
  bool classified_drsb = false;
  bool truth_drsb = false;
};

struct PairSelection {
  os::BufferPage a;
  os::BufferPage b;
  uint64_t attempts = 0;
  bool truth_drsb = false;
};

class TimingChannel {
 public:
  TimingChannel(const dram::DramGeometry& geometry, ChannelModel model);

  const ChannelModel& model() const { return model_; }

  /// Ground truth: different rows of the same bank.
  bool is_drsb(uint64_t pa, uint64_t pb) const;

  LatencySample sample(const os::BufferPage& a, const os::BufferPage& b, Rng& rng) const;
  /// Cycles drawn from one class's distribution.
  uint32_t draw_cycles(bool drsb, Rng& rng) const;

  /// Draws distinct random page pairs until one measures as DRSB. Throws
  /// AttemptCapExceeded after attempt_cap draws.
  PairSelection select_hammer_pair(std::span<const os::BufferPage> pages, Rng& rng,
                                   uint64_t attempt_cap) const;

 private:
  struct Shape {
    double mu = 0, sigma = 1, cdf_lo = 0, cdf_hi = 1;
  };
  Shape make_shape(double p_expected_side, double sigma, bool high_side) const;
  double draw(const Shape& s, Rng& rng) const;

  dram::DramGeometry geometry_;
  ChannelModel model_;
  Shape drsb_, nondrsb_;
};

}  // namespace rowambush::timing
