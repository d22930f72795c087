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

// Link accounting between the transmitter and two memory-bank receivers:
// dB budgets, the unheralded-loss error budget, memory-multiplexed rates and
// a discrete-event oracle for the rate expression.
//
// Conventions: the atmospheric (or fiber) total is split evenly between the
// two arms, fixed component losses are per arm. eta is the two-arm product.

#ifndef ZALM_LINK_HPP_
#define ZALM_LINK_HPP_

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace zalm::link {

inline constexpr std::int64_t kNoLimit = std::numeric_limits<std::int64_t>::max();

struct Channel {
  double sqrt_eta = 0.0;  // per-arm detection probability
  double p_lost = 1.0;    // lost before the spin
  double p_e = 0.0;       // lost after the spin

  double eta() const { return sqrt_eta * sqrt_eta; }
  void validate() const;
};

enum class SwitchModel { kFixed, kMziTree };

struct LinkBudget {
  double atmospheric_total = 40.0;  // dB, both arms together
  double adaptive_optics = 3.57;
  double mode_converter = 3.0;
  double cavity = 2.68;
  double switch_array = 0.8;  // used by kFixed
  double detector = 0.044;
  SwitchModel switch_model = SwitchModel::kFixed;
  double loss_per_mzi = 0.2;  // used by kMziTree

  void validate() const;
  double switch_loss(std::int64_t k) const;
  double per_arm_db(std::int64_t k) const;
  // Components the photon meets after it has interacted with the spin.
  double post_spin_db() const { return cavity + detector; }
  double sqrt_eta(std::int64_t k) const;
  Channel channel(std::int64_t k) const;
};

double mzi_tree_budget(std::int64_t k, double loss_per_mzi);

// Bulk (non-k) part of the budget for a ground link: fiber total, no
// adaptive optics, MZI-tree receiver.
LinkBudget ground_budget(double fiber_total_db);

enum class AttemptPolicy {
  kContinuous,  // N = min(N_k, N_max) used as a real number
  kFloorAtOne,  // additionally N >= 1
};

struct RepeaterParams {
  std::int64_t k = 100;
  double tau0 = 1.0 / 7.45e9;  // s
  double tau_comm = 0.5e-3;    // s
  double tau_reset = 30e-6;    // s
  std::optional<double> epsilon = 1e-2;  // unset: no reset budget
  double xi = 0.5;
  double f_tele = 0.998;
  std::optional<double> p_lost;  // overrides the budget split
  AttemptPolicy policy = AttemptPolicy::kContinuous;

  double tau_idle() const { return tau_comm + tau_reset; }
  double n_k() const;
  void validate() const;
  Channel resolve(const Channel& from_budget) const;
};

// Probability that a joint detection within N bins follows at least one
// unheralded loss.
double error_probability(std::int64_t n, double eta, double xi, double p_lost);
// Explicit term-by-term series, used as an oracle.
double error_probability_series(std::int64_t n, double eta, double xi,
                                double p_lost);

// F_max - F(N) for the given channel.
double infidelity(std::int64_t n, const Channel& ch, double xi, double f_tele);

// Largest N with infidelity <= epsilon. kNoLimit when the budget is never
// exhausted.
std::int64_t n_max_for_epsilon(double epsilon, const Channel& ch, double xi,
                               double f_tele);
std::int64_t n_max_for_epsilon_scan(double epsilon, const Channel& ch,
                                    double xi, double f_tele,
                                    std::int64_t limit = 10'000'000);

double p_success(double n, double sqrt_eta);

struct RateResult {
  double rate = 0.0;  // Hz
  double sqrt_eta = 0.0;
  double n_k = 0.0;
  std::int64_t n_max = kNoLimit;
  double n = 0.0;
  double p_success = 0.0;
};

RateResult entanglement_rate(const RepeaterParams& params, const Channel& ch);
RateResult entanglement_rate(const RepeaterParams& params,
                             const LinkBudget& budget);

// Large-k limit. Domain error unless sqrt_eta in (0, 0.999].
double rate_asymptote(double sqrt_eta, double tau0);
double rate_asymptote(const LinkBudget& budget, double tau0);

struct SourceModel {
  std::string name;
  double tau0 = 0.0;
  double xi = 0.0;
  double f_tele = 0.0;
};

struct KPoint {
  std::int64_t k = 0;
  double zalm = 0.0;
  double spdc = 0.0;
};

std::vector<std::int64_t> log_k_grid(std::int64_t k_lo, std::int64_t k_hi,
                                     int per_decade);

// Rates over k for both sources; params supplies the timing and budget.
std::vector<KPoint> rate_vs_k(const RepeaterParams& params,
                              const LinkBudget& budget,
                              const SourceModel& zalm,
                              const SourceModel& spdc,
                              const std::vector<std::int64_t>& ks,
                              int n_threads = 0);

struct ModesPoint {
  int n_modes = 0;
  double p_zalm = 0.0;
  double rate = 0.0;
};

// Rate against the number of multiplexed channels; tau0 = 1/(p_zalm rep).
std::vector<ModesPoint> rate_vs_modes(const RepeaterParams& params,
                                      const LinkBudget& budget, double p_gen,
                                      double rep_rate,
                                      const std::vector<int>& n_modes);

struct GroundCurve {
  double fiber_total_db = 0.0;
  std::vector<KPoint> points;
};

std::vector<GroundCurve> ground_only_scenario(
    double l_gg_km, const std::vector<double>& fiber_total_db,
    const RepeaterParams& params, const SourceModel& zalm,
    const SourceModel& spdc, const std::vector<std::int64_t>& ks);

struct TradeoffPoint {
  double epsilon = 0.0;
  std::int64_t n_max = 0;
  double fidelity = 0.0;
  double rate = 0.0;
};

struct TradeoffCurve {
  std::int64_t k = 0;
  std::vector<TradeoffPoint> points;
};

std::vector<TradeoffCurve> rate_fidelity_tradeoff(
    const std::vector<std::int64_t>& k_values, const RepeaterParams& params,
    const LinkBudget& budget, const std::vector<double>& epsilons);

// Discrete-event oracle.

struct DesOptions {
  double horizon = 0.0;  // s, rounded down to whole rotation cycles
  std::uint64_t seed = 1;
  int n_batches = 32;
  std::int64_t max_windows = 200'000'000;
  bool record_events = false;
};

enum class DesEventKind { kSuccess, kSingleClick, kExhausted };

struct DesEvent {
  double time = 0.0;  // window start
  std::int64_t memory = 0;
  std::int64_t attempts = 0;
  DesEventKind kind = DesEventKind::kExhausted;
  bool unheralded_error = false;

  bool operator==(const DesEvent&) const = default;
};

struct DesResult {
  double rate = 0.0;
  double stderr_rate = 0.0;
  double upper_bound = 0.0;  // 95% bound, set when no success occurred
  double horizon = 0.0;      // simulated span
  std::int64_t successes = 0;
  std::int64_t windows = 0;
  std::int64_t shots = 0;
  double error_fraction = 0.0;  // successes preceded by a loss after the spin
  bool truncated = false;
  std::vector<DesEvent> events;
};

// Source fires every tau0; memories rotate through on-duty slots of length
// tau_idle/(k-1); a slot ends at the first click or after N_max attempts.
DesResult des_oracle(const RepeaterParams& params, const Channel& ch,
                     const DesOptions& opts);

}  // namespace zalm::link

#endif  // ZALM_LINK_HPP_
