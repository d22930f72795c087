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

#include "zalm/link.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "zalm/error.hpp"
#include "zalm/parallel.hpp"
#include "zalm/source.hpp"

namespace zalm::link {

namespace {

double db_to_transmission(double db) { return std::pow(10.0, -db / 10.0); }

void require(bool ok, ErrorKind kind, const std::string& msg) {
  if (!ok) throw Error(kind, msg);
}

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

// Ratio of benign to total non-detections per arm, and 1 - ratio^2 computed
// without cancellation.
struct LossRatio {
  double r = 0.0;
  double one_minus_r2 = 1.0;
};

LossRatio loss_ratio(double sqrt_eta, double xi, double p_lost) {
  require(sqrt_eta < 1.0, ErrorKind::kPrecondition,
          "error budget needs sqrt(eta) < 1");
  const double denom = 1.0 - sqrt_eta;
  const double r = xi * p_lost / denom;
  if (r > 1.0 + 1e-12) {
    std::ostringstream os;
    os << "inconsistent channel decomposition: xi*p_lost/(1-sqrt(eta)) = " << r
       << " > 1";
    throw Error(ErrorKind::kDomain, os.str());
  }
  LossRatio out;
  out.r = std::min(r, 1.0);
  const double one_minus_r = std::max(0.0, (denom - xi * p_lost) / denom);
  out.one_minus_r2 = one_minus_r * (1.0 + out.r);
  return out;
}

double budget_limit(double eta, const LossRatio& lr) {
  // P_error as N -> infinity.
  const double one_minus_b = lr.one_minus_r2 + eta * lr.r * lr.r;
  if (one_minus_b <= 0.0) return 0.0;
  return std::max(0.0, 1.0 - eta / one_minus_b);
}

double closed_form(double n, double eta, const LossRatio& lr) {
  if (eta == 0.0 || lr.one_minus_r2 == 0.0) return 0.0;
  const double log_a = std::log1p(-eta);
  const double term1 = eta >= 1.0 ? 1.0 : -std::expm1(n * log_a);
  double term2;
  if (lr.r == 0.0) {
    term2 = eta;
  } else {
    const double one_minus_b = lr.one_minus_r2 + eta * lr.r * lr.r;
    const double log_b = (eta >= 1.0 ? -INFINITY : log_a) + 2.0 * std::log(lr.r);
    term2 = eta * -std::expm1(n * log_b) / one_minus_b;
  }
  return std::max(0.0, term1 - term2);
}

void check_fidelity(double f_tele) {
  require(f_tele >= 0.25 && f_tele <= 1.0, ErrorKind::kDomain,
          "teleported fidelity must lie in [0.25, 1]");
}

}  // namespace

void Channel::validate() const {
  require(sqrt_eta >= 0.0 && sqrt_eta <= 1.0, ErrorKind::kDomain,
          "sqrt(eta) must lie in [0,1]");
  require(finite_nonneg(p_lost) && p_lost <= 1.0, ErrorKind::kDomain,
          "p_lost must lie in [0,1]");
  require(finite_nonneg(p_e) && p_e <= 1.0, ErrorKind::kDomain,
          "p_e must lie in [0,1]");
  require(std::abs(sqrt_eta + p_lost + p_e - 1.0) < 1e-9, ErrorKind::kDomain,
          "detected, lost-before and lost-after must sum to 1");
}

void LinkBudget::validate() const {
  for (double v : {atmospheric_total, adaptive_optics, mode_converter, cavity,
                   switch_array, detector, loss_per_mzi}) {
    require(finite_nonneg(v), ErrorKind::kDomain,
            "budget entries must be finite non-negative dB values");
  }
}

double mzi_tree_budget(std::int64_t k, double loss_per_mzi) {
  require(k >= 2, ErrorKind::kPrecondition, "MZI tree needs k >= 2");
  require(finite_nonneg(loss_per_mzi), ErrorKind::kDomain,
          "loss per MZI must be non-negative");
  int layers = 0;
  while ((std::int64_t{1} << layers) < k) ++layers;
  return loss_per_mzi * layers;
}

double LinkBudget::switch_loss(std::int64_t k) const {
  return switch_model == SwitchModel::kFixed ? switch_array
                                             : mzi_tree_budget(k, loss_per_mzi);
}

double LinkBudget::per_arm_db(std::int64_t k) const {
  return atmospheric_total / 2.0 + adaptive_optics + mode_converter + cavity +
         switch_loss(k) + detector;
}

double LinkBudget::sqrt_eta(std::int64_t k) const {
  validate();
  return db_to_transmission(per_arm_db(k));
}

Channel LinkBudget::channel(std::int64_t k) const {
  Channel ch;
  ch.sqrt_eta = sqrt_eta(k);
  const double before = ch.sqrt_eta / db_to_transmission(post_spin_db());
  ch.p_lost = 1.0 - before;
  ch.p_e = before - ch.sqrt_eta;
  return ch;
}

LinkBudget ground_budget(double fiber_total_db) {
  LinkBudget b;
  b.atmospheric_total = fiber_total_db;
  b.adaptive_optics = 0.0;
  b.switch_model = SwitchModel::kMziTree;
  return b;
}

double RepeaterParams::n_k() const {
  return tau_idle() / (static_cast<double>(k - 1) * tau0);
}

void RepeaterParams::validate() const {
  require(k >= 2, ErrorKind::kPrecondition, "memory count k must be >= 2");
  require(tau0 > 0.0 && tau_comm > 0.0 && tau_reset > 0.0 &&
              std::isfinite(tau0 + tau_comm + tau_reset),
          ErrorKind::kDomain, "times must be positive");
  if (epsilon) {
    require(*epsilon >= 0.0 && *epsilon < 0.75, ErrorKind::kDomain,
            "epsilon must lie in [0, 0.75)");
  }
  require(xi >= 0.0 && xi <= 1.0, ErrorKind::kDomain, "xi must lie in [0,1]");
  check_fidelity(f_tele);
  if (p_lost) {
    require(*p_lost >= 0.0 && *p_lost <= 1.0, ErrorKind::kDomain,
            "p_lost must lie in [0,1]");
  }
}

Channel RepeaterParams::resolve(const Channel& from_budget) const {
  Channel ch = from_budget;
  if (p_lost) {
    require(*p_lost + ch.sqrt_eta <= 1.0 + 1e-12, ErrorKind::kDomain,
            "p_lost override exceeds 1 - sqrt(eta)");
    ch.p_lost = *p_lost;
    ch.p_e = std::max(0.0, 1.0 - ch.sqrt_eta - ch.p_lost);
  }
  ch.validate();
  return ch;
}

double error_probability(std::int64_t n, double eta, double xi, double p_lost) {
  require(n >= 1, ErrorKind::kPrecondition, "N must be >= 1");
  require(eta >= 0.0 && eta <= 1.0, ErrorKind::kDomain, "eta must lie in [0,1]");
  const auto lr = loss_ratio(std::sqrt(eta), xi, p_lost);
  return closed_form(static_cast<double>(n), eta, lr);
}

double error_probability_series(std::int64_t n, double eta, double xi,
                                double p_lost) {
  require(n >= 1, ErrorKind::kPrecondition, "N must be >= 1");
  const auto lr = loss_ratio(std::sqrt(eta), xi, p_lost);
  const double r2 = lr.r * lr.r;
  double sum = 0.0, r_pow = 1.0, a_pow = 1.0;
  for (std::int64_t m = 1; m <= n; ++m) {
    sum += (1.0 - r_pow) * a_pow * eta;
    r_pow *= r2;
    a_pow *= 1.0 - eta;
  }
  return sum;
}

double infidelity(std::int64_t n, const Channel& ch, double xi, double f_tele) {
  check_fidelity(f_tele);
  return error_probability(n, ch.eta(), xi, ch.p_lost) * (f_tele - 0.25);
}

std::int64_t n_max_for_epsilon(double epsilon, const Channel& ch, double xi,
                               double f_tele) {
  if (!(epsilon >= 0.0)) {
    std::ostringstream os;
    os << "infidelity budget " << epsilon
       << " is unachievable; the minimum infidelity is 0 (at N = 1)";
    throw Error(ErrorKind::kPrecondition, os.str());
  }
  check_fidelity(f_tele);
  const double eta = ch.eta();
  const auto lr = loss_ratio(ch.sqrt_eta, xi, ch.p_lost);
  const double scale = f_tele - 0.25;
  if (scale * budget_limit(eta, lr) <= epsilon) return kNoLimit;
  auto eps_at = [&](std::int64_t n) {
    return scale * closed_form(static_cast<double>(n), eta, lr);
  };
  // Exponential bracket, then integer bisection on the monotone closed form.
  std::int64_t lo = 1, hi = 2;
  while (eps_at(hi) <= epsilon) {
    lo = hi;
    if (hi > (std::int64_t{1} << 61)) return kNoLimit;
    hi *= 2;
  }
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    (eps_at(mid) <= epsilon ? lo : hi) = mid;
  }
  return lo;
}

std::int64_t n_max_for_epsilon_scan(double epsilon, const Channel& ch,
                                    double xi, double f_tele,
                                    std::int64_t limit) {
  require(epsilon >= 0.0, ErrorKind::kPrecondition, "epsilon must be >= 0");
  check_fidelity(f_tele);
  const double eta = ch.eta();
  const auto lr = loss_ratio(ch.sqrt_eta, xi, ch.p_lost);
  const double r2 = lr.r * lr.r;
  const double scale = f_tele - 0.25;
  double sum = 0.0, r_pow = 1.0, a_pow = 1.0;
  for (std::int64_t m = 1; m <= limit; ++m) {
    sum += (1.0 - r_pow) * a_pow * eta;
    if (scale * sum > epsilon) return m - 1;
    r_pow *= r2;
    a_pow *= 1.0 - eta;
  }
  throw Error(ErrorKind::kPrecondition, "scan limit reached before budget");
}

double p_success(double n, double sqrt_eta) {
  require(sqrt_eta >= 0.0 && sqrt_eta <= 1.0, ErrorKind::kDomain,
          "sqrt(eta) must lie in [0,1]");
  if (n <= 0.0 || sqrt_eta == 0.0) return 0.0;
  const double eta = sqrt_eta * sqrt_eta;
  const double one_minus_q = sqrt_eta * (2.0 - sqrt_eta);
  const double num = -std::expm1(2.0 * n * std::log1p(-sqrt_eta));
  return eta * num / one_minus_q;
}

RateResult entanglement_rate(const RepeaterParams& params, const Channel& ch_in) {
  params.validate();
  const Channel ch = params.resolve(ch_in);
  RateResult out;
  out.sqrt_eta = ch.sqrt_eta;
  out.n_k = params.n_k();
  if (params.epsilon && ch.sqrt_eta < 1.0) {
    out.n_max = n_max_for_epsilon(*params.epsilon, ch, params.xi, params.f_tele);
  }
  out.n = std::min(out.n_k, static_cast<double>(out.n_max));
  if (params.policy == AttemptPolicy::kFloorAtOne) out.n = std::max(out.n, 1.0);
  out.p_success = p_success(out.n, ch.sqrt_eta);
  out.rate = out.p_success * static_cast<double>(params.k - 1) / params.tau_idle();
  return out;
}

RateResult entanglement_rate(const RepeaterParams& params,
                             const LinkBudget& budget) {
  return entanglement_rate(params, budget.channel(params.k));
}

double rate_asymptote(double sqrt_eta, double tau0) {
  require(sqrt_eta > 0.0 && sqrt_eta <= 0.999, ErrorKind::kDomain,
          "asymptote is evaluated only for sqrt(eta) in (0, 0.999]");
  require(tau0 > 0.0, ErrorKind::kDomain, "tau0 must be positive");
  const double eta = sqrt_eta * sqrt_eta;
  const double one_minus_q = sqrt_eta * (2.0 - sqrt_eta);
  return eta / one_minus_q * 2.0 / tau0 * -std::log1p(-sqrt_eta);
}

double rate_asymptote(const LinkBudget& budget, double tau0) {
  require(budget.switch_model == SwitchModel::kFixed, ErrorKind::kPrecondition,
          "asymptote needs a k-independent switch loss");
  return rate_asymptote(budget.sqrt_eta(2), tau0);
}

std::vector<std::int64_t> log_k_grid(std::int64_t k_lo, std::int64_t k_hi,
                                     int per_decade) {
  require(k_lo >= 2 && k_hi >= k_lo && per_decade >= 1,
          ErrorKind::kPrecondition, "k grid needs 2 <= k_lo <= k_hi");
  std::vector<std::int64_t> ks;
  const double l0 = std::log10(static_cast<double>(k_lo));
  const double l1 = std::log10(static_cast<double>(k_hi));
  const int n = std::max(1, static_cast<int>(std::ceil((l1 - l0) * per_decade)));
  for (int i = 0; i <= n; ++i) {
    const double l = l0 + (l1 - l0) * i / n;
    auto k = static_cast<std::int64_t>(std::llround(std::pow(10.0, l)));
    k = std::clamp(k, k_lo, k_hi);
    if (ks.empty() || k != ks.back()) ks.push_back(k);
  }
  return ks;
}

std::vector<KPoint> rate_vs_k(const RepeaterParams& params,
                              const LinkBudget& budget,
                              const SourceModel& zalm,
                              const SourceModel& spdc,
                              const std::vector<std::int64_t>& ks,
                              int n_threads) {
  std::vector<KPoint> out(ks.size());
  auto eval = [&](std::int64_t k, const SourceModel& s) {
    RepeaterParams p = params;
    p.k = k;
    p.tau0 = s.tau0;
    p.xi = s.xi;
    p.f_tele = s.f_tele;
    return entanglement_rate(p, budget).rate;
  };
  parallel_for(
      ks.size(),
      [&](std::size_t i) {
        out[i].k = ks[i];
        out[i].zalm = eval(ks[i], zalm);
        out[i].spdc = eval(ks[i], spdc);
      },
      static_cast<unsigned>(std::max(0, n_threads)));
  return out;
}

std::vector<ModesPoint> rate_vs_modes(const RepeaterParams& params,
                                      const LinkBudget& budget, double p_gen,
                                      double rep_rate,
                                      const std::vector<int>& n_modes) {
  require(rep_rate > 0.0, ErrorKind::kDomain, "repetition rate must be positive");
  std::vector<ModesPoint> out;
  out.reserve(n_modes.size());
  for (int m : n_modes) {
    ModesPoint pt;
    pt.n_modes = m;
    pt.p_zalm = source::p_zalm(p_gen, m);
    RepeaterParams p = params;
    p.tau0 = 1.0 / (pt.p_zalm * rep_rate);
    pt.rate = entanglement_rate(p, budget).rate;
    out.push_back(pt);
  }
  return out;
}

std::vector<GroundCurve> ground_only_scenario(
    double l_gg_km, const std::vector<double>& fiber_total_db,
    const RepeaterParams& params, const SourceModel& zalm,
    const SourceModel& spdc, const std::vector<std::int64_t>& ks) {
  require(l_gg_km > 0.0, ErrorKind::kDomain, "L_gg must be positive");
  std::vector<GroundCurve> out;
  for (double a : fiber_total_db) {
    GroundCurve c;
    c.fiber_total_db = a;
    c.points = rate_vs_k(params, ground_budget(a), zalm, spdc, ks);
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<TradeoffCurve> rate_fidelity_tradeoff(
    const std::vector<std::int64_t>& k_values, const RepeaterParams& params,
    const LinkBudget& budget, const std::vector<double>& epsilons) {
  require(!k_values.empty(), ErrorKind::kPrecondition, "k_values is empty");
  std::vector<TradeoffCurve> out;
  for (std::int64_t k : k_values) {
    TradeoffCurve c;
    c.k = k;
    RepeaterParams p = params;
    p.k = k;
    p.validate();
    const Channel ch = p.resolve(budget.channel(k));
    for (double eps : epsilons) {
      p.epsilon = eps;
      const auto r = entanglement_rate(p, ch);
      TradeoffPoint pt;
      pt.epsilon = eps;
      pt.n_max = r.n_max;
      if (r.n_max == kNoLimit) {
        const auto lr = loss_ratio(ch.sqrt_eta, p.xi, ch.p_lost);
        pt.fidelity = p.f_tele - (p.f_tele - 0.25) * budget_limit(ch.eta(), lr);
      } else {
        pt.fidelity = p.f_tele - infidelity(r.n_max, ch, p.xi, p.f_tele);
      }
      pt.rate = r.rate;
      c.points.push_back(pt);
    }
    out.push_back(std::move(c));
  }
  return out;
}

DesResult des_oracle(const RepeaterParams& params, const Channel& ch_in,
                     const DesOptions& opts) {
  params.validate();
  const Channel ch = params.resolve(ch_in);
  require(opts.horizon > 0.0, ErrorKind::kPrecondition, "horizon must be positive");
  require(opts.n_batches >= 1, ErrorKind::kPrecondition, "n_batches must be >= 1");

  const std::int64_t k = params.k;
  const double tau_on = params.tau_idle() / static_cast<double>(k - 1);
  const double cycle = tau_on * static_cast<double>(k);
  auto n_cycles = static_cast<std::int64_t>(std::floor(opts.horizon / cycle));
  require(n_cycles >= 1, ErrorKind::kPrecondition,
          "horizon is shorter than one rotation cycle");
  DesResult res;
  if (n_cycles > opts.max_windows / k) {
    n_cycles = std::max<std::int64_t>(1, opts.max_windows / k);
    res.truncated = true;
  }
  res.horizon = static_cast<double>(n_cycles) * cycle;

  std::int64_t n_max = kNoLimit;
  if (params.epsilon && ch.sqrt_eta < 1.0) {
    n_max = n_max_for_epsilon(*params.epsilon, ch, params.xi, params.f_tele);
  }

  std::mt19937_64 rng(opts.seed);
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  // Joint outcome of the two independent arms, one draw per shot: both
  // detected, exactly one detected, neither (both lost before the spin),
  // neither with at least one loss after the spin.
  const double s = ch.sqrt_eta;
  const double c_both = s * s;
  const double c_one = c_both + 2.0 * s * (1.0 - s);
  const double c_clean = c_one + ch.p_lost * ch.p_lost;

  const int n_batches = static_cast<int>(std::min<std::int64_t>(opts.n_batches, n_cycles));
  std::vector<double> batch_successes(n_batches, 0.0);
  std::vector<std::int64_t> batch_cycles(n_batches, 0);
  std::int64_t errors = 0;
  const double slot_shots = tau_on / params.tau0;

  for (std::int64_t c = 0; c < n_cycles; ++c) {
    const int b = static_cast<int>(c * n_batches / n_cycles);
    ++batch_cycles[b];
    for (std::int64_t i = 0; i < k; ++i) {
      // Memory i is on duty in slot i of every cycle and spends the other
      // k-1 slots (tau_idle) communicating and resetting.
      const auto slot = static_cast<double>(c * k + i);
      const double x = slot * slot_shots;
      const auto shots = static_cast<std::int64_t>(std::ceil(x + slot_shots) - std::ceil(x));
      const std::int64_t allowed = std::min(shots, n_max);
      DesEvent ev;
      ev.time = slot * tau_on;
      ev.memory = i;
      bool tainted = false;
      for (std::int64_t j = 0; j < allowed; ++j) {
        const double u = uniform();
        ++ev.attempts;
        if (u < c_both) {
          ev.kind = DesEventKind::kSuccess;
          break;
        }
        if (u < c_one) {
          ev.kind = DesEventKind::kSingleClick;
          break;
        }
        tainted = tainted || u >= c_clean;
      }
      res.shots += ev.attempts;
      ++res.windows;
      if (ev.kind == DesEventKind::kSuccess) {
        ++res.successes;
        batch_successes[b] += 1.0;
        ev.unheralded_error = tainted;
        if (tainted) ++errors;
      }
      if (opts.record_events) res.events.push_back(ev);
    }
  }

  res.rate = static_cast<double>(res.successes) / res.horizon;
  if (res.successes > 0) {
    res.error_fraction = static_cast<double>(errors) / static_cast<double>(res.successes);
  } else {
    res.upper_bound = 3.0 / res.horizon;
  }
  if (n_batches >= 2) {
    std::vector<double> rates(n_batches);
    double mean = 0.0;
    for (int b = 0; b < n_batches; ++b) {
      rates[b] = batch_successes[b] / (static_cast<double>(batch_cycles[b]) * cycle);
      mean += rates[b];
    }
    mean /= n_batches;
    double ss = 0.0;
    for (double r : rates) ss += (r - mean) * (r - mean);
    res.stderr_rate = std::sqrt(ss / (n_batches - 1) / n_batches);
  } else {
    res.stderr_rate = std::sqrt(static_cast<double>(res.successes)) / res.horizon;
  }
  return res;
}

}  // namespace zalm::link
