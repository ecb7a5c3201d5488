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
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <boost/algorithm/string.hpp>

#include "rowambush/error.hpp"
#include "rowambush/harness.hpp"

namespace rowambush::harness {

const std::vector<std::string> kCsvColumns = {
    "seed",           "strategy",        "driver",           "mitigation",        "threshold_bytes",
    "available_bytes", "footprint_bytes", "adjacency",        "adjacent_pairs",    "small_block_bytes",
    "drained_pt_pages", "stuffed_pt_pages", "pt_pages",       "flips",             "pt_flips",
    "status",         "rounds",          "pair_attempts",    "activations",       "guard_cost_per_buffer_bytes",
    "reserved_guard_bytes",
};

namespace {

exploit::Status parse_status(const std::string& s) {
  for (auto st : {exploit::Status::none, exploit::Status::flippable_only, exploit::Status::kernel_privilege,
                  exploit::Status::root_privilege}) {
    if (s == exploit::to_string(st)) return st;
  }
  throw ConfigError("csv: unknown status '" + s + "'");
}

uint64_t parse_u64(const std::string& s) {
  try {
    size_t used = 0;
    const uint64_t v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("csv: bad integer '" + s + "'");
  }
}

bool parse_flag(const std::string& s) {
  if (s == "1") return true;
  if (s == "0") return false;
  throw ConfigError("csv: bad flag '" + s + "'");
}

}  // namespace

void write_csv(std::ostream& out, std::span<const TrialReport> trials) {
  out << boost::algorithm::join(kCsvColumns, ",") << '\n';
  for (const auto& t : trials) {
    out << t.seed << ',' << to_string(t.strategy) << ',' << os::to_string(t.driver) << ',' << t.mitigation << ','
        << t.threshold_bytes << ',' << t.available_bytes << ',' << t.footprint_bytes << ',' << t.adjacency << ','
        << t.adjacent_pairs << ',' << t.small_block_bytes << ',' << t.drained_pt_pages << ','
        << t.stuffed_pt_pages << ',' << t.pt_pages << ',' << t.flips << ',' << t.pt_flips << ','
        << exploit::to_string(t.status) << ',' << t.rounds << ',' << t.pair_attempts << ',' << t.activations << ','
        << t.guard_cost_per_buffer_bytes << ',' << t.reserved_guard_bytes << '\n';
  }
  if (!out) throw SimError("failed writing csv report");
}

std::vector<TrialReport> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv: missing header");
  boost::algorithm::trim_right(line);
  if (line != boost::algorithm::join(kCsvColumns, ",")) throw ConfigError("csv: unexpected header");
  std::vector<TrialReport> out;
  while (std::getline(in, line)) {
    boost::algorithm::trim_right(line);
    if (line.empty()) continue;
    std::vector<std::string> f;
    boost::algorithm::split(f, line, boost::is_any_of(","));
    if (f.size() != kCsvColumns.size()) throw ConfigError("csv: wrong field count");
    TrialReport t;
    size_t i = 0;
    t.seed = parse_u64(f[i++]);
    auto strategy = parse_strategy(f[i++]);
    auto driver = os::parse_driver(f[i++]);
    if (!strategy || !driver) throw ConfigError("csv: bad strategy or driver");
    t.strategy = *strategy;
    t.driver = *driver;
    t.mitigation = parse_flag(f[i++]);
    t.threshold_bytes = parse_u64(f[i++]);
    t.available_bytes = parse_u64(f[i++]);
    t.footprint_bytes = parse_u64(f[i++]);
    t.adjacency = parse_flag(f[i++]);
    t.adjacent_pairs = parse_u64(f[i++]);
    t.small_block_bytes = parse_u64(f[i++]);
    t.drained_pt_pages = parse_u64(f[i++]);
    t.stuffed_pt_pages = parse_u64(f[i++]);
    t.pt_pages = parse_u64(f[i++]);
    t.flips = parse_u64(f[i++]);
    t.pt_flips = parse_u64(f[i++]);
    t.status = parse_status(f[i++]);
    t.rounds = parse_u64(f[i++]);
    t.pair_attempts = parse_u64(f[i++]);
    t.activations = parse_u64(f[i++]);
    t.guard_cost_per_buffer_bytes = parse_u64(f[i++]);
    t.reserved_guard_bytes = parse_u64(f[i++]);
    out.push_back(t);
  }
  return out;
}

void write_text(std::ostream& out, const Aggregate& a) {
  const Summary& s = a.summary;
  auto pct = [&s](uint64_t c) {
    std::ostringstream os;
    os << c << '/' << s.trials << " (" << std::fixed << std::setprecision(1) << 100.0 * s.rate(c) << "%)";
    return os.str();
  };
  constexpr double mib = static_cast<double>(MiB);
  out << "profile      " << a.profile << '\n'
      << "strategy     " << to_string(a.config.strategy) << " / " << os::to_string(a.config.driver)
      << (a.config.mitigation ? " / guard rows" : "") << '\n'
      << "seed         " << a.seed << '\n'
      << "trials       " << s.trials << '\n'
      << "adjacency    " << pct(s.adjacency) << '\n'
      << "flippable    " << pct(s.flippable) << '\n'
      << "exploitable  " << pct(s.exploitable) << '\n'
      << "root         " << pct(s.root) << '\n'
      << std::fixed << std::setprecision(2)
      << "footprint    mean " << s.mean_footprint_bytes / mib << " MiB, max "
      << static_cast<double>(s.max_footprint_bytes) / mib << " MiB\n"
      << "available    mean " << s.mean_available_bytes / mib << " MiB\n"
      << "rounds       mean " << s.mean_rounds << '\n'
      << "activations  mean " << std::setprecision(0) << s.mean_activations << '\n';
  if (a.config.mitigation) out << "guard cost   " << s.guard_cost_per_buffer_bytes / KiB << " KiB per buffer\n";
  if (!out) throw SimError("failed writing text report");
}

}  // namespace rowambush::harness
