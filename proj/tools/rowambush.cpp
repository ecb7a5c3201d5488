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
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "rowambush/ambush.hpp"
#include "rowambush/buddy.hpp"
#include "rowambush/error.hpp"
#include "rowambush/harness.hpp"
#include "rowambush/profile.hpp"
#include "rowambush/workload.hpp"

using namespace rowambush;

namespace {

// Accepts plain bytes or a K/M/G suffix (binary units).
uint64_t parse_size(const std::string& text) {
  if (text.empty()) throw ConfigError("empty size");
  size_t used = 0;
  const double v = std::stod(text, &used);
  std::string suffix = text.substr(used);
  if (!suffix.empty() && (suffix.back() == 'B' || suffix.back() == 'b')) suffix.pop_back();
  if (!suffix.empty() && (suffix.back() == 'i')) suffix.pop_back();
  uint64_t unit = 1;
  if (suffix == "K" || suffix == "k") {
    unit = KiB;
  } else if (suffix == "M" || suffix == "m") {
    unit = MiB;
  } else if (suffix == "G" || suffix == "g") {
    unit = GiB;
  } else if (!suffix.empty()) {
    throw ConfigError("bad size suffix in '" + text + "'");
  }
  if (v < 0) throw ConfigError("negative size");
  return static_cast<uint64_t>(v * static_cast<double>(unit));
}

MachineProfile resolve_profile(const std::string& spec) {
  if (std::filesystem::exists(spec)) return load_profile(spec);
  return builtin_profile(spec);
}

struct Output {
  std::string path;
  std::string format = "text";

  void emit(const harness::Aggregate& agg) const {
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!path.empty() && path != "-") {
      file.open(path);
      if (!file) throw SimError("cannot open " + path);
      out = &file;
    }
    if (format == "csv") {
      harness::write_csv(*out, agg.trials);
    } else {
      harness::write_text(*out, agg);
    }
  }
};

void add_output(CLI::App* cmd, Output& o) {
  cmd->add_option("-o,--output", o.path, "Output file (default stdout)");
  cmd->add_option("-f,--format", o.format, "Report format")->check(CLI::IsMember({"csv", "text"}));
}

std::string mib(uint64_t bytes) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << static_cast<double>(bytes) / MiB << " MiB";
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Row-buffer ambush attack simulator"};
  app.require_subcommand(1);

  std::string profile_spec = "dell";
  std::string strategy = "ambush";
  std::string driver = "video";
  std::string threshold;
  uint64_t trials = 50;
  uint64_t seed = 1;
  unsigned jobs = 0;
  bool mitigation = false;
  bool no_hammer = false;
  Output output;

  auto* run = app.add_subcommand("run", "Run seeded trials and report per-trial metrics");
  run->add_option("-p,--profile", profile_spec, "Profile INI path or built-in name (dell, lenovo)");
  run->add_option("-s,--strategy", strategy)->check(CLI::IsMember({"ambush", "spray", "feng_shui"}));
  run->add_option("-d,--driver", driver)->check(CLI::IsMember({"video", "sg"}));
  run->add_option("-t,--threshold", threshold, "Attack memory threshold, e.g. 88M");
  run->add_option("-n,--trials", trials);
  run->add_option("--seed", seed);
  run->add_option("-j,--jobs", jobs, "Worker threads (0 = all cores)");
  run->add_flag("-m,--mitigation", mitigation, "Allocate device buffers with guard rows");
  run->add_flag("--no-hammer", no_hammer, "Stop after placement");
  add_output(run, output);

  auto* mitigate = app.add_subcommand("mitigate", "Evaluate the guard-row policy");
  mitigate->add_option("-p,--profile", profile_spec);
  mitigate->add_option("-d,--driver", driver)->check(CLI::IsMember({"video", "sg"}));
  mitigate->add_option("-n,--trials", trials);
  mitigate->add_option("--seed", seed);
  mitigate->add_option("-j,--jobs", jobs);
  add_output(mitigate, output);

  auto* plan_cmd = app.add_subcommand("plan", "Print the sizing for a threshold");
  plan_cmd->add_option("-t,--threshold", threshold)->required();
  plan_cmd->add_option("-d,--driver", driver)->check(CLI::IsMember({"video", "sg"}));
  plan_cmd->add_option("-p,--profile", profile_spec);

  std::string stage = "preload";
  auto* info = app.add_subcommand("buddyinfo", "Dump free-block counts of a fresh simulated system");
  info->add_option("-p,--profile", profile_spec);
  info->add_option("--seed", seed);
  info->add_option("-d,--driver", driver)->check(CLI::IsMember({"video", "sg"}));
  info->add_option("--stage", stage, "preload | drained | placed")
      ->check(CLI::IsMember({"preload", "drained", "placed"}));

  std::vector<double> weak_rows;
  std::vector<double> one_to_zero;
  std::vector<uint32_t> cells;
  auto* calibrate = app.add_subcommand("calibrate", "Sweep vulnerability density against end-to-end rates");
  calibrate->add_option("-p,--profile", profile_spec);
  calibrate->add_option("-d,--driver", driver)->check(CLI::IsMember({"video", "sg"}));
  calibrate->add_option("-n,--trials", trials);
  calibrate->add_option("--seed", seed);
  calibrate->add_option("-j,--jobs", jobs);
  calibrate->add_option("-w,--weak-row-probability", weak_rows, "Values to try")->required();
  calibrate->add_option("--one-to-zero", one_to_zero, "Values to try (default: profile value)");
  calibrate->add_option("--cells", cells, "Cells per weak row to try (default: profile value)");

  auto* show = app.add_subcommand("profile", "Print a profile as INI");
  show->add_option("-p,--profile", profile_spec);

  CLI11_PARSE(app, argc, argv);

  try {
    const MachineProfile profile = resolve_profile(profile_spec);
    const os::Driver drv = *os::parse_driver(driver);

    if (*run) {
      harness::TrialConfig cfg;
      cfg.strategy = *harness::parse_strategy(strategy);
      cfg.driver = drv;
      cfg.mitigation = mitigation;
      cfg.hammer = !no_hammer;
      if (!threshold.empty()) cfg.threshold = parse_size(threshold);
      output.emit(harness::run_trials(profile, cfg, trials, seed, jobs));
    } else if (*mitigate) {
      output.emit(harness::evaluate_mitigation(profile, drv, trials, seed, jobs));
    } else if (*plan_cmd) {
      const auto p = ambush::plan(parse_size(threshold), drv, profile.drivers);
      std::cout << "driver            " << os::to_string(p.driver) << '\n'
                << "threshold         " << mib(p.threshold_mem_size) << '\n'
                << "dev_buf_size      " << mib(p.dev_buf_size) << " (actual " << mib(p.actual_dev_buf_size) << ")\n"
                << "file_size         " << mib(p.file_size) << '\n'
                << "pt_size           " << mib(p.pt_size) << '\n'
                << "map_mem_size      " << mib(p.map_mem_size) << '\n'
                << "vma_num           " << p.vma_num << " (limit " << p.vma_limit << ")\n"
                << "pt_page_budget    " << p.pt_page_budget << " pages\n";
    } else if (*info) {
      const auto g = profile.geometry();
      os::OsConfig oc;
      oc.kernel_bytes = profile.kernel_bytes;
      os::OsModel os(g, oc, derive_seed(seed, 1));
      Rng rng(derive_seed(seed, 2));
      buddy::preload_kernel(os.allocator(), profile.residue_bytes, profile.preload_free_fraction,
                            ambush::target_order(g), rng);
      if (stage != "preload") {
        ambush::Ambusher a(os, ambush::plan(drv == os::Driver::video ? profile.video_threshold : profile.sg_threshold,
                                            drv, profile.drivers));
        a.drain_small_blocks();
        if (stage == "placed") a.place_interleaved();
      }
      std::cout << buddy::format_buddyinfo(os.allocator().buddy_info());
    } else if (*calibrate) {
      if (one_to_zero.empty()) one_to_zero.push_back(profile.vulnerability.one_to_zero_fraction);
      if (cells.empty()) cells.push_back(profile.vulnerability.cells_per_weak_row);
      harness::TrialConfig cfg;
      cfg.driver = drv;
      std::cout << "cells,weak_row_p,one_to_zero,trials,flippable,exploitable,root,exploitable_per_flippable\n";
      for (uint32_t k : cells) {
      for (double f : one_to_zero) {
        for (double w : weak_rows) {
          MachineProfile p = profile;
          p.vulnerability.weak_row_probability = w;
          p.vulnerability.one_to_zero_fraction = f;
          p.vulnerability.cells_per_weak_row = k;
          const auto s = harness::run_trials(p, cfg, trials, seed, jobs).summary;
          std::cout << k << ',' << w << ',' << f << ',' << s.trials << ',' << s.rate(s.flippable) << ','
                    << s.rate(s.exploitable) << ',' << s.rate(s.root) << ','
                    << (s.flippable ? static_cast<double>(s.exploitable) / s.flippable : 0.0) << std::endl;
        }
      }
      }
    } else if (*show) {
      std::cout << format_profile(profile);
    }
  } catch (const SimError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
