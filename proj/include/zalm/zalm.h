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

/* C interface to zalmsim. Objects are opaque handles released with the
 * matching *_free call. Every function returning zalm_status stores a
 * message for zalm_last_error() on failure; the message is per thread and
 * stays valid until the next failing call on that thread. */

#ifndef ZALM_ZALM_H_
#define ZALM_ZALM_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ZALM_API __declspec(dllexport)
#else
#define ZALM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as CLI exit codes for the first four. */
typedef enum zalm_status {
  ZALM_OK = 0,
  ZALM_ERR_INTERNAL = 1,
  ZALM_ERR_CONFIG = 2,
  ZALM_ERR_TOLERANCE = 3,
  ZALM_ERR_DOMAIN = 4,
  ZALM_ERR_PRECONDITION = 5,
  ZALM_ERR_NUMERICAL = 6,
  ZALM_ERR_IO = 7,
  ZALM_ERR_ARGUMENT = 8
} zalm_status;

typedef enum zalm_profile {
  ZALM_PROFILE_STRICT = 0,
  ZALM_PROFILE_PAPER = 1
} zalm_profile;

typedef struct zalm_scenario zalm_scenario;
typedef struct zalm_report zalm_report;

typedef struct zalm_run_options {
  const char* output_dir;   /* NULL: scenario, then ZALM_OUTPUT_DIR */
  int has_seed;
  uint64_t seed;
  unsigned jobs;            /* 0: hardware concurrency */
  zalm_profile profile;
  const char* scenario_dir; /* NULL: ZALM_SCENARIO_DIR or built-in */
} zalm_run_options;

typedef struct zalm_check {
  const char* name;
  double value;
  double expected;
  double tolerance;
  int relative;
  int pass;
} zalm_check;

ZALM_API const char* zalm_version(void);
ZALM_API const char* zalm_last_error(void);
ZALM_API const char* zalm_status_name(zalm_status status);

ZALM_API size_t zalm_target_count(void);
ZALM_API const char* zalm_target_name(size_t index);

ZALM_API void zalm_run_options_init(zalm_run_options* opts);

ZALM_API zalm_status zalm_scenario_load(const char* path, zalm_scenario** out);
ZALM_API zalm_status zalm_scenario_parse(const char* text, zalm_scenario** out);
ZALM_API void zalm_scenario_free(zalm_scenario* s);
ZALM_API const char* zalm_scenario_name(const zalm_scenario* s);
ZALM_API uint64_t zalm_scenario_hash(const zalm_scenario* s);
ZALM_API int zalm_scenario_has_sweep(const zalm_scenario* s);

/* Runs the bundled scenario for `target`. A tolerance breach returns
 * ZALM_ERR_TOLERANCE and still fills *out so the checks can be listed. */
ZALM_API zalm_status zalm_run_target(const char* target,
                                     const zalm_run_options* opts,
                                     zalm_report** out);
ZALM_API zalm_status zalm_run_scenario_target(const zalm_scenario* s,
                                              const char* target,
                                              const zalm_run_options* opts,
                                              zalm_report** out);
ZALM_API zalm_status zalm_run_sweep(const zalm_scenario* s,
                                    const zalm_run_options* opts,
                                    zalm_report** out);

ZALM_API void zalm_report_free(zalm_report* r);
ZALM_API const char* zalm_report_output_dir(const zalm_report* r);
ZALM_API uint64_t zalm_report_hash(const zalm_report* r);
ZALM_API double zalm_report_wall_seconds(const zalm_report* r);
ZALM_API size_t zalm_report_file_count(const zalm_report* r);
ZALM_API const char* zalm_report_file(const zalm_report* r, size_t index);
ZALM_API size_t zalm_report_check_count(const zalm_report* r);
ZALM_API zalm_status zalm_report_check(const zalm_report* r, size_t index,
                                       zalm_check* out);

/* Scalar helpers. Defaults follow the reference configuration. */
ZALM_API zalm_status zalm_p_gen(double mean_photon_number,
                                double detector_efficiency, double* out);
ZALM_API zalm_status zalm_p_zalm(double p_gen, int n_modes, double* out);
ZALM_API zalm_status zalm_detector_pileup(double mean_photon_number,
                                          double reset_time_s,
                                          double pair_rate_hz, double* mu,
                                          double* p_multi);
/* Satellite link with the reference budget; epsilon < 0 disables N_max. */
ZALM_API zalm_status zalm_entanglement_rate(int64_t k, double atmospheric_db,
                                            double tau_comm_s, double epsilon,
                                            double tau0_s, double xi,
                                            double* rate_hz);
ZALM_API zalm_status zalm_rate_asymptote(double sqrt_eta, double tau0_s,
                                         double* rate_hz);

#ifdef __cplusplus
}
#endif

#endif /* ZALM_ZALM_H_ */
