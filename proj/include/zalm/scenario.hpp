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

// Scenario runner: JSON scenario files, reproduction targets, sweeps, CSV
// output and run manifests.
//
// A scenario is a JSON object with optional top-level "name", "seed",
// "output_dir" and one object per section: source, spectral,
// mode_converter, spin, link, repeater, sweep. Unknown keys anywhere are
// errors (ErrorKind::kConfig) naming the offending field.

#ifndef ZALM_SCENARIO_HPP_
#define ZALM_SCENARIO_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace zalm::scenario {

enum class Target {
  kFig3,
  kFig5a,
  kFig5b,
  kFig6,
  kFigS3,
  kFigS5,
  kFigS6,
  kFigS7,
  kFigS8,
  kTableGoldens,
};

const std::vector<std::string>& target_names();
std::optional<Target> parse_target(std::string_view name);
const char* target_name(Target t);

enum class ToleranceProfile { kStrict, kPaper };
std::optional<ToleranceProfile> parse_profile(std::string_view name);

std::uint64_t fnv1a(std::string_view data);
std::string hex64(std::uint64_t v);

struct Scenario {
  std::string name;
  std::string origin;     // file path or "<string>"
  std::string canonical;  // sorted-key JSON, the hashed form
  std::uint64_t seed = 1;
  std::string output_dir;
  std::uint64_t hash = 0;  // over canonical text and seed
};

// Parses and validates every section. Throws Error(kConfig) with the field
// path in the message.
Scenario parse_scenario(const std::string& text,
                        const std::string& origin = "<string>");
Scenario load_scenario(const std::string& path);

struct RunOptions {
  std::string output_dir;    // overrides the scenario / environment
  std::optional<std::uint64_t> seed;
  unsigned jobs = 0;         // 0 = hardware concurrency
  ToleranceProfile profile = ToleranceProfile::kStrict;
  std::string scenario_dir;  // bundled scenarios; empty = built-in default
};

struct Check {
  std::string name;
  double value = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool relative = false;
  bool pass = false;
};

struct RunReport {
  std::string target;
  std::string scenario;
  std::uint64_t hash = 0;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::vector<std::string> files;
  std::vector<Check> checks;
  double wall_seconds = 0.0;

  bool checks_pass() const;
};

std::string default_scenario_dir();
std::string resolve_output_dir(const Scenario& s, const RunOptions& opts);

RunReport run_reproduction(Target target, const RunOptions& opts);
RunReport run_scenario_target(const Scenario& s, Target target,
                              const RunOptions& opts);
// Requires a [sweep] section naming exactly one axis.
RunReport run_sweep(const Scenario& s, const RunOptions& opts);

}  // namespace zalm::scenario

#endif  // ZALM_SCENARIO_HPP_
