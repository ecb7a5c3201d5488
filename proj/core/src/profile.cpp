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
#include "rowambush/profile.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "rowambush/error.hpp"

namespace rowambush {

namespace pt = boost::property_tree;

dram::DramGeometry MachineProfile::geometry() const {
  return dram::DramGeometry(dimms, ranks_per_dimm, banks_per_rank, rows_per_bank, row_size, mapping);
}

void MachineProfile::validate() const {
  dram::DramGeometry g = [&] {
    try {
      return geometry();
    } catch (const SimError& e) {
      throw ConfigError(std::string("geometry: ") + e.what());
    }
  }();
  if (kernel_bytes == 0 || kernel_bytes % g.rows_size_per_row_index() != 0 ||
      kernel_bytes + 2 * g.rows_size_per_row_index() > g.capacity()) {
    throw ConfigError("kernel partition size does not fit the geometry");
  }
  if (residue_bytes >= kernel_bytes) throw ConfigError("small-block residue must be below the kernel partition size");
  if (!(preload_free_fraction > 0.0 && preload_free_fraction < 1.0)) {
    throw ConfigError("preload free fraction must lie in (0, 1)");
  }
  const auto probability = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!probability(channel.p_high_given_drsb) || !probability(channel.p_low_given_nondrsb) ||
      !probability(vulnerability.weak_row_probability) || !probability(vulnerability.cell_probability) ||
      !probability(vulnerability.one_to_zero_fraction) || !probability(oom_watermark)) {
    throw ConfigError("probabilities must lie in [0, 1]");
  }
  if (hammer.dose_activations == 0) throw ConfigError("hammer dose must be positive");
  if (attack.pair_attempt_cap == 0) throw ConfigError("pair attempt cap must be positive");
}

MachineProfile dell_e6420_profile() {
  MachineProfile p;
  p.name = "dell_e6420";
  p.channel.p_high_given_drsb = 0.927;
  p.channel.p_low_given_nondrsb = 0.974;
  p.vulnerability.weak_row_probability = 0.0025;
  p.vulnerability.cells_per_weak_row = 48;
  p.vulnerability.cell_probability = 1.0;
  p.vulnerability.one_to_zero_fraction = 1.0;
  p.attack.rounds_cap = 256;
  return p;
}

MachineProfile lenovo_t420_profile() {
  MachineProfile p = dell_e6420_profile();
  p.name = "lenovo_t420";
  p.residue_bytes = 115 * MiB;
  p.channel.p_high_given_drsb = 1.0;
  p.channel.p_low_given_nondrsb = 0.990;
  p.video_threshold = 147 * MiB;
  p.sg_threshold = 168 * MiB;
  p.vulnerability.weak_row_probability *= 3215.0 / 2836.0;
  return p;
}

MachineProfile builtin_profile(const std::string& name) {
  const std::string n = boost::algorithm::to_lower_copy(name);
  if (n == "dell" || n == "dell_e6420") return dell_e6420_profile();
  if (n == "lenovo" || n == "lenovo_t420") return lenovo_t420_profile();
  throw ConfigError("unknown built-in profile '" + name + "'");
}

namespace {

std::vector<dram::XorFunction> parse_functions(const std::string& text) {
  std::vector<dram::XorFunction> out;
  std::vector<std::string> groups;
  const std::string trimmed = boost::algorithm::trim_copy(text);
  if (trimmed.empty()) return out;
  boost::algorithm::split(groups, trimmed, boost::is_any_of(" ,"), boost::token_compress_on);
  for (const auto& g : groups) {
    std::vector<std::string> bits;
    boost::algorithm::split(bits, g, boost::is_any_of("^"));
    dram::XorFunction f;
    for (const auto& b : bits) {
      try {
        f.push_back(static_cast<unsigned>(std::stoul(b)));
      } catch (const std::exception&) {
        throw ConfigError("bad bit index '" + b + "' in '" + text + "'");
      }
    }
    out.push_back(std::move(f));
  }
  return out;
}

std::string format_functions(const std::vector<dram::XorFunction>& fns) {
  std::ostringstream os;
  for (size_t i = 0; i < fns.size(); ++i) {
    if (i) os << ' ';
    for (size_t j = 0; j < fns[i].size(); ++j) os << (j ? "^" : "") << fns[i][j];
  }
  return os.str();
}

// Shortest text that parses back to the same double.
std::string shortest(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
void read(const pt::ptree& t, const char* key, T& into) {
  if (t.get_child_optional(key)) into = t.get<T>(key);
}

void read_bool(const pt::ptree& t, const char* key, bool& into) {
  if (auto v = t.get_optional<std::string>(key)) {
    const std::string s = boost::algorithm::to_lower_copy(boost::algorithm::trim_copy(*v));
    if (s == "true" || s == "1" || s == "on" || s == "yes") {
      into = true;
    } else if (s == "false" || s == "0" || s == "off" || s == "no") {
      into = false;
    } else {
      throw ConfigError(std::string("bad boolean for ") + key + ": " + *v);
    }
  }
}

}  // namespace

MachineProfile parse_profile(const std::string& text) {
  pt::ptree t;
  std::istringstream in(text);
  try {
    pt::read_ini(in, t);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("profile: ") + e.what());
  }
  MachineProfile p = builtin_profile(t.get<std::string>("profile.base", "dell"));
  try {
    read(t, "profile.name", p.name);

    read(t, "dram.dimms", p.dimms);
    read(t, "dram.ranks_per_dimm", p.ranks_per_dimm);
    read(t, "dram.banks_per_rank", p.banks_per_rank);
    read(t, "dram.rows_per_bank", p.rows_per_bank);
    read(t, "dram.row_size", p.row_size);
    if (auto v = t.get_optional<std::string>("dram.dimm_functions")) p.mapping.dimm_functions = parse_functions(*v);
    if (auto v = t.get_optional<std::string>("dram.rank_functions")) p.mapping.rank_functions = parse_functions(*v);
    if (auto v = t.get_optional<std::string>("dram.bank_functions")) p.mapping.bank_functions = parse_functions(*v);
    read(t, "dram.row_lo", p.mapping.row_lo);
    read(t, "dram.row_hi", p.mapping.row_hi);

    read(t, "memory.kernel_bytes", p.kernel_bytes);
    read(t, "memory.residue_bytes", p.residue_bytes);
    read(t, "memory.preload_free_fraction", p.preload_free_fraction);
    read(t, "memory.fresh_small_block_bytes", p.fresh_small_block_bytes);
    read_bool(t, "memory.refresh_on_recheck", p.refresh_on_recheck);
    read(t, "memory.fresh_drain_cap_bytes", p.fresh_drain_cap_bytes);
    read(t, "memory.oom_watermark", p.oom_watermark);
    read(t, "memory.decoy_creds", p.decoy_creds);

    read(t, "channel.threshold_cycles", p.channel.threshold_cycles);
    read(t, "channel.p_high_given_drsb", p.channel.p_high_given_drsb);
    read(t, "channel.p_low_given_nondrsb", p.channel.p_low_given_nondrsb);
    read(t, "channel.sigma_drsb", p.channel.sigma_drsb);
    read(t, "channel.sigma_nondrsb", p.channel.sigma_nondrsb);

    read(t, "vulnerability.weak_row_probability", p.vulnerability.weak_row_probability);
    read(t, "vulnerability.cells_per_weak_row", p.vulnerability.cells_per_weak_row);
    read(t, "vulnerability.cell_probability", p.vulnerability.cell_probability);
    read(t, "vulnerability.one_to_zero_fraction", p.vulnerability.one_to_zero_fraction);

    read(t, "hammer.dose_activations", p.hammer.dose_activations);
    read(t, "hammer.double_sided_multiplier", p.hammer.double_sided_multiplier);
    read(t, "hammer.single_sided_multiplier", p.hammer.single_sided_multiplier);
    read(t, "hammer.one_location_multiplier", p.hammer.one_location_multiplier);

    read(t, "attack.rounds_cap", p.attack.rounds_cap);
    read(t, "attack.reps", p.attack.reps);
    read(t, "attack.pair_attempt_cap", p.attack.pair_attempt_cap);
    read(t, "attack.uid", p.attack.uid);
    read(t, "attack.video_threshold", p.video_threshold);
    read(t, "attack.sg_threshold", p.sg_threshold);

    read(t, "drivers.video_chunks", p.drivers.video_chunks);
    read(t, "drivers.video_chunk_bytes", p.drivers.video_chunk_bytes);
    read(t, "drivers.sg_opens", p.drivers.sg_opens);
    read(t, "drivers.sg_bytes", p.drivers.sg_bytes);
    read(t, "drivers.vma_limit", p.drivers.vma_limit);
  } catch (const pt::ptree_bad_data& e) {
    throw ConfigError(std::string("profile: ") + e.what());
  }
  p.validate();
  return p;
}

MachineProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open profile " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_profile(ss.str());
}

std::string format_profile(const MachineProfile& p) {
  pt::ptree t;
  t.put("profile.name", p.name);
  t.put("dram.dimms", p.dimms);
  t.put("dram.ranks_per_dimm", p.ranks_per_dimm);
  t.put("dram.banks_per_rank", p.banks_per_rank);
  t.put("dram.rows_per_bank", p.rows_per_bank);
  t.put("dram.row_size", p.row_size);
  t.put("dram.dimm_functions", format_functions(p.mapping.dimm_functions));
  t.put("dram.rank_functions", format_functions(p.mapping.rank_functions));
  t.put("dram.bank_functions", format_functions(p.mapping.bank_functions));
  t.put("dram.row_lo", p.mapping.row_lo);
  t.put("dram.row_hi", p.mapping.row_hi);
  t.put("memory.kernel_bytes", p.kernel_bytes);
  t.put("memory.residue_bytes", p.residue_bytes);
  t.put("memory.preload_free_fraction", shortest(p.preload_free_fraction));
  t.put("memory.fresh_small_block_bytes", p.fresh_small_block_bytes);
  t.put("memory.refresh_on_recheck", p.refresh_on_recheck ? "true" : "false");
  t.put("memory.fresh_drain_cap_bytes", p.fresh_drain_cap_bytes);
  t.put("memory.oom_watermark", shortest(p.oom_watermark));
  t.put("memory.decoy_creds", p.decoy_creds);
  t.put("channel.threshold_cycles", p.channel.threshold_cycles);
  t.put("channel.p_high_given_drsb", shortest(p.channel.p_high_given_drsb));
  t.put("channel.p_low_given_nondrsb", shortest(p.channel.p_low_given_nondrsb));
  t.put("channel.sigma_drsb", shortest(p.channel.sigma_drsb));
  t.put("channel.sigma_nondrsb", shortest(p.channel.sigma_nondrsb));
  t.put("vulnerability.weak_row_probability", shortest(p.vulnerability.weak_row_probability));
  t.put("vulnerability.cells_per_weak_row", p.vulnerability.cells_per_weak_row);
  t.put("vulnerability.cell_probability", shortest(p.vulnerability.cell_probability));
  t.put("vulnerability.one_to_zero_fraction", shortest(p.vulnerability.one_to_zero_fraction));
  t.put("hammer.dose_activations", p.hammer.dose_activations);
  t.put("hammer.double_sided_multiplier", shortest(p.hammer.double_sided_multiplier));
  t.put("hammer.single_sided_multiplier", shortest(p.hammer.single_sided_multiplier));
  t.put("hammer.one_location_multiplier", shortest(p.hammer.one_location_multiplier));
  t.put("attack.rounds_cap", p.attack.rounds_cap);
  t.put("attack.reps", p.attack.reps);
  t.put("attack.pair_attempt_cap", p.attack.pair_attempt_cap);
  t.put("attack.uid", p.attack.uid);
  t.put("attack.video_threshold", p.video_threshold);
  t.put("attack.sg_threshold", p.sg_threshold);
  t.put("drivers.video_chunks", p.drivers.video_chunks);
  t.put("drivers.video_chunk_bytes", p.drivers.video_chunk_bytes);
  t.put("drivers.sg_opens", p.drivers.sg_opens);
  t.put("drivers.sg_bytes", p.drivers.sg_bytes);
  t.put("drivers.vma_limit", p.drivers.vma_limit);
  std::ostringstream os;
  pt::write_ini(os, t);
  return os.str();
}

}  // namespace rowambush
