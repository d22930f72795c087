// Copyright 2026 The zalmsim Authors
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

// zalmsim command line: run bundled reproduction targets, sweep or
// validate scenario files. Exit codes: 0 ok, 1 runtime failure, 2 config
// error, 3 tolerance breach.

#include <cinttypes>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "zalm/zalm.h"

namespace {

struct Flags {
  std::string output_dir;
  std::uint64_t seed = 0;
  bool has_seed = false;
  unsigned jobs = 0;
  std::string profile = "strict";
  std::string scenario_dir;
};

zalm_run_options to_options(const Flags& f) {
  zalm_run_options o;
  zalm_run_options_init(&o);
  o.output_dir = f.output_dir.empty() ? nullptr : f.output_dir.c_str();
  o.has_seed = f.has_seed;
  o.seed = f.seed;
  o.jobs = f.jobs;
  o.profile = f.profile == "paper" ? ZALM_PROFILE_PAPER : ZALM_PROFILE_STRICT;
  o.scenario_dir = f.scenario_dir.empty() ? nullptr : f.scenario_dir.c_str();
  return o;
}

int exit_code(zalm_status st) {
  switch (st) {
    case ZALM_OK: return 0;
    case ZALM_ERR_CONFIG: return 2;
    case ZALM_ERR_TOLERANCE: return 3;
    default: return 1;
  }
}

void print_report(const zalm_report* r) {
  std::printf("output: %s\n", zalm_report_output_dir(r));
  std::printf("hash: %016" PRIx64 "\n", zalm_report_hash(r));
  for (size_t i = 0; i < zalm_report_file_count(r); ++i) {
    std::printf("  wrote %s\n", zalm_report_file(r, i));
  }
  for (size_t i = 0; i < zalm_report_check_count(r); ++i) {
    zalm_check c;
    zalm_report_check(r, i, &c);
    std::printf("  %-4s %-22s value=%.6g expected=%.6g tol=%.3g%s\n", c.pass ? "ok" : "FAIL",
                c.name, c.value, c.expected, c.tolerance, c.relative ? " (rel)" : "");
  }
  std::printf("wall: %.2f s\n", zalm_report_wall_seconds(r));
}

int finish(zalm_status st, zalm_report* r) {
  if (r) print_report(r);
  zalm_report_free(r);
  if (st != ZALM_OK) std::fprintf(stderr, "error (%s): %s\n", zalm_status_name(st), zalm_last_error());
  return exit_code(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zalmsim scenario runner"};
  app.set_version_flag("--version", zalm_version());
  app.require_subcommand(1);

  Flags flags;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--output-dir", flags.output_dir, "Output directory (default: $ZALM_OUTPUT_DIR)");
    sub->add_option("--seed", flags.seed, "Override the scenario seed");
    sub->add_option("--jobs", flags.jobs, "Worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
    sub->add_option("--tolerance-profile", flags.profile, "Golden tolerance profile")
        ->check(CLI::IsMember({"strict", "paper"}));
    sub->add_option("--scenario-dir", flags.scenario_dir, "Bundled scenario directory");
  };

  std::string target;
  auto* run = app.add_subcommand("run", "Run a bundled reproduction target");
  std::vector<std::string> names;
  for (size_t i = 0; i < zalm_target_count(); ++i) names.emplace_back(zalm_target_name(i));
  run->add_option("target", target, "Target name")->required()->check(CLI::IsMember(names));
  add_common(run);

  std::string file;
  auto* sweep = app.add_subcommand("sweep", "Run the [sweep] section of a scenario file");
  sweep->add_option("scenario", file, "Scenario file")->required();
  add_common(sweep);

  std::string run_target;
  auto* validate = app.add_subcommand("validate", "Validate a scenario file");
  validate->add_option("scenario", file, "Scenario file")->required();

  auto* exec = app.add_subcommand("exec", "Run one target with a custom scenario file");
  exec->add_option("target", run_target, "Target name")->required()->check(CLI::IsMember(names));
  exec->add_option("scenario", file, "Scenario file")->required();
  add_common(exec);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  for (auto* sub : {run, sweep, exec}) {
    if (sub->count("--seed")) flags.has_seed = true;
  }
  const zalm_run_options opts = to_options(flags);

  if (*run) {
    zalm_report* r = nullptr;
    const zalm_status st = zalm_run_target(target.c_str(), &opts, &r);
    return finish(st, r);
  }

  zalm_scenario* s = nullptr;
  zalm_status st = zalm_scenario_load(file.c_str(), &s);
  if (st != ZALM_OK) {
    std::fprintf(stderr, "error (%s): %s\n", zalm_status_name(st), zalm_last_error());
    return exit_code(st);
  }
  if (*validate) {
    std::printf("%s: ok (scenario '%s', hash %016" PRIx64 ")\n", file.c_str(),
                zalm_scenario_name(s), zalm_scenario_hash(s));
    zalm_scenario_free(s);
    return 0;
  }
  zalm_report* r = nullptr;
  if (*sweep) {
    st = zalm_run_sweep(s, &opts, &r);
  } else {
    st = zalm_run_scenario_target(s, run_target.c_str(), &opts, &r);
  }
  zalm_scenario_free(s);
  return finish(st, r);
}
