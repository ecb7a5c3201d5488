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
#include "rowambush/timing.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "rowambush/error.hpp"

namespace rowambush::timing {

namespace {

const boost::math::normal kStd(0.0, 1.0);

// Distance (in sigmas) from the threshold to the mean when every sample must
// land on one side.
constexpr double kCertainOffset = 2.0;

}  // namespace

TimingChannel::TimingChannel(const dram::DramGeometry& geometry, ChannelModel model)
    : geometry_(geometry), model_(model) {
  for (double p : {model_.p_high_given_drsb, model_.p_low_given_nondrsb}) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("channel probabilities must lie in [0, 1]");
  }
  if (!(model_.sigma_drsb > 0 && model_.sigma_nondrsb > 0 && model_.truncation_sigmas > 0)) {
    throw InvalidArgument("channel spreads must be positive");
  }
  drsb_ = make_shape(model_.p_high_given_drsb, model_.sigma_drsb, true);
  nondrsb_ = make_shape(model_.p_low_given_nondrsb, model_.sigma_nondrsb, false);
}

TimingChannel::Shape TimingChannel::make_shape(double p, double sigma, bool high_side) const {
  const double t = model_.threshold_cycles;
  const double k = model_.truncation_sigmas;
  // Mass of the expected side; high_side means "expected at or above t".
  const double q = high_side ? p : 1.0 - p;  // P(X >= t)
  Shape s;
  s.sigma = sigma;
  double lo, hi;
  if (q >= 1.0) {
    s.mu = t + kCertainOffset * sigma;
    lo = t;
    hi = s.mu + k * sigma;
  } else if (q <= 0.0) {
    s.mu = t - kCertainOffset * sigma;
    lo = s.mu - k * sigma;
    hi = std::nextafter(t, 0.0);
  } else {
    s.mu = t + sigma * boost::math::quantile(kStd, q);
    lo = s.mu - k * sigma;
    hi = s.mu + k * sigma;
  }
  lo = std::max(lo, 1.0);
  s.cdf_lo = boost::math::cdf(kStd, (lo - s.mu) / sigma);
  s.cdf_hi = boost::math::cdf(kStd, (hi - s.mu) / sigma);
  return s;
}

double TimingChannel::draw(const Shape& s, Rng& rng) const {
  double u = s.cdf_lo + rng.uniform() * (s.cdf_hi - s.cdf_lo);
  u = std::clamp(u, 1e-300, std::nextafter(1.0, 0.0));
  return s.mu + s.sigma * boost::math::quantile(kStd, u);
}

bool TimingChannel::is_drsb(uint64_t pa, uint64_t pb) const {
  const dram::RowKey a = geometry_.row_of(pa);
  const dram::RowKey b = geometry_.row_of(pb);
  return a.dimm == b.dimm && a.rank == b.rank && a.bank == b.bank && a.row != b.row;
}

uint32_t TimingChannel::draw_cycles(bool drsb, Rng& rng) const {
  const double x = draw(drsb ? drsb_ : nondrsb_, rng);
  return static_cast<uint32_t>(std::floor(std::max(x, 0.0)));
}

LatencySample TimingChannel::sample(const os::BufferPage& a, const os::BufferPage& b, Rng& rng) const {
  LatencySample s;
  s.va = a.vaddr;
  s.vb = b.vaddr;
  s.truth_drsb = is_drsb(a.paddr, b.paddr);
  s.cycles = draw_cycles(s.truth_drsb, rng);
  s.classified_drsb = s.cycles >= model_.threshold_cycles;
  return s;
}

PairSelection TimingChannel::select_hammer_pair(std::span<const os::BufferPage> pages, Rng& rng,
                                                uint64_t attempt_cap) const {
  if (pages.size() < 2) throw InvalidArgument("pair selection needs at least two buffer pages");
  PairSelection out;
  while (out.attempts < attempt_cap) {
    ++out.attempts;
    const size_t i = rng.below(pages.size());
    size_t j = rng.below(pages.size() - 1);
    if (j >= i) ++j;
    const LatencySample s = sample(pages[i], pages[j], rng);
    if (s.classified_drsb) {
      out.a = pages[i];
      out.b = pages[j];
      out.truth_drsb = s.truth_drsb;
      return out;
    }
  }
  throw AttemptCapExceeded("no DRSB pair after " + std::to_string(attempt_cap) + " attempts");
}

}  // namespace rowambush::timing
