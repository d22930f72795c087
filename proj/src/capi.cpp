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

#include "zalm/zalm.h"

#include <exception>
#include <new>
#include <string>
#include <vector>

#include "zalm/error.hpp"
#include "zalm/link.hpp"
#include "zalm/scenario.hpp"
#include "zalm/source.hpp"
#include "zalm/version.hpp"

struct zalm_scenario {
  zalm::scenario::Scenario s;
};

struct zalm_report {
  zalm::scenario::RunReport r;
};

namespace {

thread_local std::string g_last_error;

zalm_status set_error(zalm_status st, const std::string& msg) {
  g_last_error = msg;
  return st;
}

zalm_status map_kind(zalm::ErrorKind k) {
  using zalm::ErrorKind;
  switch (k) {
    case ErrorKind::kConfig: return ZALM_ERR_CONFIG;
    case ErrorKind::kTolerance: return ZALM_ERR_TOLERANCE;
    case ErrorKind::kDomain: return ZALM_ERR_DOMAIN;
    case ErrorKind::kPrecondition: return ZALM_ERR_PRECONDITION;
    case ErrorKind::kNumerical:
    case ErrorKind::kUnnormalizable:
    case ErrorKind::kSynthesis: return ZALM_ERR_NUMERICAL;
    case ErrorKind::kIo: return ZALM_ERR_IO;
    case ErrorKind::kStructural: return ZALM_ERR_INTERNAL;
  }
  return ZALM_ERR_INTERNAL;
}

// Runs fn and converts exceptions into status codes.
template <typename Fn>
zalm_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const zalm::Error& e) {
    return set_error(map_kind(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(ZALM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(ZALM_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(ZALM_ERR_INTERNAL, "unknown exception");
  }
}

zalm::scenario::RunOptions convert(const zalm_run_options* o) {
  zalm::scenario::RunOptions r;
  if (!o) return r;
  if (o->output_dir) r.output_dir = o->output_dir;
  if (o->has_seed) r.seed = o->seed;
  r.jobs = o->jobs;
  r.profile = o->profile == ZALM_PROFILE_PAPER ? zalm::scenario::ToleranceProfile::kPaper
                                               : zalm::scenario::ToleranceProfile::kStrict;
  if (o->scenario_dir) r.scenario_dir = o->scenario_dir;
  return r;
}

zalm_status finish(zalm::scenario::RunReport rep, zalm_report** out) {
  const bool ok = rep.checks_pass();
  std::string failed;
  for (const auto& c : rep.checks) {
    if (!c.pass) failed += (failed.empty() ? "" : ", ") + c.name;
  }
  *out = new zalm_report{std::move(rep)};
  if (!ok) return set_error(ZALM_ERR_TOLERANCE, "tolerance breach: " + failed);
  return ZALM_OK;
}

}  // namespace

extern "C" {

const char* zalm_version(void) { return zalm::kVersion; }

const char* zalm_last_error(void) { return g_last_error.c_str(); }

const char* zalm_status_name(zalm_status status) {
  switch (status) {
    case ZALM_OK: return "ok";
    case ZALM_ERR_INTERNAL: return "internal";
    case ZALM_ERR_CONFIG: return "config";
    case ZALM_ERR_TOLERANCE: return "tolerance";
    case ZALM_ERR_DOMAIN: return "domain";
    case ZALM_ERR_PRECONDITION: return "precondition";
    case ZALM_ERR_NUMERICAL: return "numerical";
    case ZALM_ERR_IO: return "io";
    case ZALM_ERR_ARGUMENT: return "argument";
  }
  return "unknown";
}

size_t zalm_target_count(void) { return zalm::scenario::target_names().size(); }

const char* zalm_target_name(size_t index) {
  const auto& n = zalm::scenario::target_names();
  return index < n.size() ? n[index].c_str() : nullptr;
}

void zalm_run_options_init(zalm_run_options* opts) {
  if (!opts) return;
  *opts = zalm_run_options{nullptr, 0, 0, 0, ZALM_PROFILE_STRICT, nullptr};
}

zalm_status zalm_scenario_load(const char* path, zalm_scenario** out) {
  if (!path || !out) return set_error(ZALM_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new zalm_scenario{zalm::scenario::load_scenario(path)};
    return ZALM_OK;
  });
}

zalm_status zalm_scenario_parse(const char* text, zalm_scenario** out) {
  if (!text || !out) return set_error(ZALM_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new zalm_scenario{zalm::scenario::parse_scenario(text)};
    return ZALM_OK;
  });
}

void zalm_scenario_free(zalm_scenario* s) { delete s; }

const char* zalm_scenario_name(const zalm_scenario* s) { return s ? s->s.name.c_str() : nullptr; }

uint64_t zalm_scenario_hash(const zalm_scenario* s) { return s ? s->s.hash : 0; }

int zalm_scenario_has_sweep(const zalm_scenario* s) {
  return s && s->s.canonical.find("\"sweep\":") != std::string::npos;
}

zalm_status zalm_run_target(const char* target, const zalm_run_options* opts,
                            zalm_report** out) {
  if (!target || !out) return set_error(ZALM_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  const auto t = zalm::scenario::parse_target(target);
  if (!t) return set_error(ZALM_ERR_CONFIG, std::string("unknown target '") + target + "'");
  return guarded([&] { return finish(zalm::scenario::run_reproduction(*t, convert(opts)), out); });
}

zalm_status zalm_run_scenario_target(const zalm_scenario* s, const char* target,
                                     const zalm_run_options* opts, zalm_report** out) {
  if (!s || !target || !out) return set_error(ZALM_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  const auto t = zalm::scenario::parse_target(target);
  if (!t) return set_error(ZALM_ERR_CONFIG, std::string("unknown target '") + target + "'");
  return guarded([&] {
    return finish(zalm::scenario::run_scenario_target(s->s, *t, convert(opts)), out);
  });
}

zalm_status zalm_run_sweep(const zalm_scenario* s, const zalm_run_options* opts,
                           zalm_report** out) {
  if (!s || !out) return set_error(ZALM_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] { return finish(zalm::scenario::run_sweep(s->s, convert(opts)), out); });
}

void zalm_report_free(zalm_report* r) { delete r; }

const char* zalm_report_output_dir(const zalm_report* r) {
  return r ? r->r.output_dir.c_str() : nullptr;
}

uint64_t zalm_report_hash(const zalm_report* r) { return r ? r->r.hash : 0; }

double zalm_report_wall_seconds(const zalm_report* r) { return r ? r->r.wall_seconds : 0.0; }

size_t zalm_report_file_count(const zalm_report* r) { return r ? r->r.files.size() : 0; }

const char* zalm_report_file(const zalm_report* r, size_t index) {
  return r && index < r->r.files.size() ? r->r.files[index].c_str() : nullptr;
}

size_t zalm_report_check_count(const zalm_report* r) { return r ? r->r.checks.size() : 0; }

zalm_status zalm_report_check(const zalm_report* r, size_t index, zalm_check* out) {
  if (!r || !out) return set_error(ZALM_ERR_ARGUMENT, "null argument");
  if (index >= r->r.checks.size()) return set_error(ZALM_ERR_ARGUMENT, "check index out of range");
  const auto& c = r->r.checks[index];
  *out = zalm_check{c.name.c_str(), c.value, c.expected, c.tolerance, c.relative, c.pass};
  return ZALM_OK;
}

zalm_status zalm_p_gen(double mean_photon_number, double detector_efficiency, double* out) {
  if (!out) return set_error(ZALM_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    zalm::source::SpdcParams p;
    p.mean_photon_number = mean_photon_number;
    p.validate();
    *out = zalm::source::p_gen(p, zalm::source::uniform_detectors(detector_efficiency),
                               {zalm::source::kReferencePattern});
    return ZALM_OK;
  });
}

zalm_status zalm_p_zalm(double p_gen, int n_modes, double* out) {
  if (!out) return set_error(ZALM_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    *out = zalm::source::p_zalm(p_gen, n_modes);
    return ZALM_OK;
  });
}

zalm_status zalm_detector_pileup(double mean_photon_number, double reset_time_s,
                                 double pair_rate_hz, double* mu, double* p_multi) {
  if (!mu || !p_multi) return set_error(ZALM_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    zalm::source::SpdcParams p;
    p.mean_photon_number = mean_photon_number;
    p.validate();
    const auto r = zalm::source::detector_pileup(p, reset_time_s, pair_rate_hz);
    *mu = r.mean_occupancy;
    *p_multi = r.p_multi;
    return ZALM_OK;
  });
}

zalm_status zalm_entanglement_rate(int64_t k, double atmospheric_db, double tau_comm_s,
                                   double epsilon, double tau0_s, double xi, double* rate_hz) {
  if (!rate_hz) return set_error(ZALM_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    zalm::link::LinkBudget b;
    b.atmospheric_total = atmospheric_db;
    zalm::link::RepeaterParams p;
    p.k = k;
    p.tau_comm = tau_comm_s;
    p.tau0 = tau0_s;
    p.xi = xi;
    if (epsilon < 0.0) p.epsilon.reset(); else p.epsilon = epsilon;
    *rate_hz = zalm::link::entanglement_rate(p, b).rate;
    return ZALM_OK;
  });
}

zalm_status zalm_rate_asymptote(double sqrt_eta, double tau0_s, double* rate_hz) {
  if (!rate_hz) return set_error(ZALM_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    *rate_hz = zalm::link::rate_asymptote(sqrt_eta, tau0_s);
    return ZALM_OK;
  });
}

}  // extern "C"
