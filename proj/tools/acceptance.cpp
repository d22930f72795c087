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

// Acceptance runner. Each criterion prints one line
//   criterion NN: PASS|FAIL  <measured values>  [t=..s]
// and the process exits 0 only if every selected criterion passes.
// Usage: acceptance [--criterion N]...

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "zalm/converter.hpp"
#include "zalm/error.hpp"
#include "zalm/fock.hpp"
#include "zalm/link.hpp"
#include "zalm/parallel.hpp"
#include "zalm/source.hpp"
#include "zalm/spectral.hpp"
#include "zalm/spin.hpp"

namespace {

using namespace zalm;

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Small printf-into-string helper; g++ 11 has no <format>.
template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool within_rel(double v, double want, double tol) { return std::abs(v / want - 1.0) <= tol; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Reference operating point, derived from the source model rather than
// typed in, so the link criteria exercise the whole pipeline.
struct Reference {
  source::SpdcParams spdc;
  source::FidelityConfig fid;
  double p_gen = 0.0;
  double p_zalm = 0.0;
  double emission = 0.0;
  double f_zalm = 0.0;
  double xi_zalm = 0.0;
  source::FreeRunningResult fr;
  double xi_spdc = 0.0;

  link::SourceModel zalm_model() const { return {"zalm", 1.0 / emission, xi_zalm, f_zalm}; }
  link::SourceModel spdc_model() const { return {"spdc", 1.0 / fr.rate, xi_spdc, 0.998}; }
};

const source::DetectorBank& detectors() {
  static const auto d = source::uniform_detectors(1.0);
  return d;
}

const Reference& reference() {
  static const Reference r = [] {
    Reference x;
    x.p_gen = source::p_gen(x.spdc, detectors(), {source::kReferencePattern});
    x.p_zalm = source::p_zalm(x.p_gen, x.spdc.n_modes());
    x.emission = source::emission_rate(x.spdc, x.p_zalm);
    x.f_zalm = source::zalm_fidelity(x.spdc.mean_photon_number, x.fid).fidelity;
    const auto rec = source::herald(source::apply_bsa(source::build_source_pure(x.spdc)),
                                    detectors(), source::kReferencePattern, x.fid.visibility);
    x.xi_zalm = source::both_receive_probability(*rec.heralded_state);
    x.fr = source::free_running_spdc(x.spdc, 200e6, x.fid, 0.998);
    x.xi_spdc = source::both_receive_probability(source::free_running_state(x.fr.ns_required));
    return x;
  }();
  return r;
}

link::RepeaterParams satellite(std::int64_t k, double tau_comm, std::optional<double> eps) {
  const auto& r = reference();
  link::RepeaterParams p;
  p.k = k;
  p.tau0 = 1.0 / r.emission;
  p.xi = r.xi_zalm;
  p.f_tele = r.f_zalm;
  p.tau_comm = tau_comm;
  p.epsilon = eps;
  return p;
}

// 1. Heralding probability.
Outcome c01() {
  const auto t0 = std::chrono::steady_clock::now();
  source::SpdcParams p;
  const double pg = source::p_gen(p, detectors(), {source::kReferencePattern});
  const double t = seconds_since(t0);
  return {within_rel(pg, 3.6e-4, 0.20) && t < 30.0,
          fmt("p_gen=%.5g (want 3.6e-4 +-20%%, rel err %.3f)", pg, pg / 3.6e-4 - 1.0)};
}

// 2. Multiplexed success and emission rate.
Outcome c02() {
  const auto& r = reference();
  const double pz = 1.0 - std::pow(1.0 - r.p_gen, 800);
  const bool ok = within_rel(pz, 0.25, 1e-3) && within_rel(r.emission, 7.45e9, 1e-3);
  return {ok, fmt("p_zalm=%.5g (want 0.25, rel err %.4f), emission=%.5g Hz (want 7.45e9, rel err %.4f)",
                  pz, pz / 0.25 - 1.0, r.emission, r.emission / 7.45e9 - 1.0)};
}

// 3. Free-running baseline at F = 0.998.
Outcome c03() {
  const auto& fr = reference().fr;
  if (!fr.found) return {false, "target fidelity not reached"};
  const bool ok = within_rel(fr.ns_required, 1.27e-3, 0.2) && within_rel(fr.p_spdc, 2.5e-3, 0.2) &&
                  within_rel(fr.rate, 75e6, 0.2);
  return {ok, fmt("N_s=%.4g (want 1.27e-3, rel %.3f), p=%.4g (want 2.5e-3, rel %.3f), rate=%.4g Hz (want 7.5e7)",
                  fr.ns_required, fr.ns_required / 1.27e-3 - 1.0, fr.p_spdc, fr.p_spdc / 2.5e-3 - 1.0,
                  fr.rate)};
}

// 4. Fidelity curves.
Outcome c04() {
  const auto t0 = std::chrono::steady_clock::now();
  source::FidelityConfig cfg;
  std::vector<double> ns(30);
  for (int i = 0; i < 30; ++i) ns[i] = 1e-7 * std::pow(1e6, i / 29.0);
  const auto z = source::fidelity_vs_ns(source::SourceKind::kZalm, ns, cfg);
  // The printed dark-count term does not depend on N_s; the rising edge of
  // the free-running curve needs stations that herald on any click.
  auto cond = cfg;
  cond.dark_model = spin::DarkModel::kConditional;
  const auto f = source::fidelity_vs_ns(source::SourceKind::kFreeRunning, ns, cond);
  const double t = seconds_since(t0);
  const double f08 = source::zalm_fidelity(8e-2, cfg).fidelity;
  std::size_t imax = 0;
  for (std::size_t i = 1; i < f.size(); ++i) {
    if (f[i].fidelity > f[imax].fidelity) imax = i;
  }
  const bool interior = imax > 0 && imax + 1 < f.size();
  return {f08 >= 0.995 && interior && t < 120.0 && z.size() == 30,
          fmt("F_zalm(0.08)=%.6f, free-running (conditional dark) max F=%.6f at N_s=%.3g (interior=%d), sweep %.2fs",
              f08, f[imax].fidelity, f[imax].n_mean, interior ? 1 : 0, t)};
}

// 5. Detector pile-up. The occupancy comes from the reference inputs
// (1 ns reset, 7.45 GHz pairs over 4 x 800 detectors); the quoted 2.3e-3 is
// that value rounded.
Outcome c05() {
  source::SpdcParams p;
  const auto r = source::detector_pileup(p, 1e-9, 7.45e9);
  const double mu_lit = 2.3e-3;
  const double lit = -std::expm1(-mu_lit) - mu_lit * std::exp(-mu_lit);
  return {within_rel(r.p_multi, 2.7e-6, 0.02) && std::abs(r.mean_occupancy - 2.3e-3) < 0.05e-3,
          fmt("mu=%.5g p_multi=%.5g (rel %.4f); rounded mu=2.3e-3 gives %.5g (rel %.4f)",
              r.mean_occupancy, r.p_multi, r.p_multi / 2.7e-6 - 1.0, lit, lit / 2.7e-6 - 1.0)};
}

// 6. Spectral goldens and grid convergence.
Outcome c06() {
  spectral::SpectralConfig cfg;
  const auto s256 = spectral::summarize(spectral::reference_jsa(cfg));
  const auto v256 = spectral::max_visibility(cfg);
  auto fine = cfg;
  fine.n_points *= 2;
  fine.grid_span_hz = cfg.grid_span_hz;
  const auto s512 = spectral::summarize(spectral::reference_jsa(fine));
  const auto v512 = spectral::max_visibility(fine);
  const double f_swap = (1.0 + v256.visibility) / 2.0;
  const double ds = std::abs(s512.entropy - s256.entropy);
  const double dv = std::abs(v512.visibility - v256.visibility);
  const bool ok = std::abs(s256.entropy - 0.446) <= 0.02 && std::abs(v256.visibility - 0.996) <= 0.002 &&
                  std::abs(f_swap - 0.998) <= 0.001 && ds < 1e-3 && dv < 1e-3;
  return {ok, fmt("S=%.4f v=%.5f F_swap=%.5f; grid doubling dS=%.2e dv=%.2e", s256.entropy,
                  v256.visibility, f_swap, ds, dv)};
}

// 7. Mode converter with the reference pulse and cavity.
Outcome c07() {
  const auto t0 = std::chrono::steady_clock::now();
  converter::GaussianPulse pulse;
  pulse.arrival = 10 * pulse.fwhm;
  const auto cav = converter::reference_cavity(pulse);
  std::vector<double> offsets;
  for (int i = -10; i <= 10; ++i) offsets.push_back(i * pulse.fwhm / 10.0);
  const auto timing = converter::sweep_conversion(pulse, cav, converter::SweepAxis::kTimingOffset, offsets);
  std::vector<double> kappas;
  for (int i = 0; i <= 20; ++i) kappas.push_back(converter::kappa_from_q(1e6 * std::pow(100.0, i / 20.0), 737e-9));
  const double k4 = converter::kappa_from_q(4e6, 737e-9);
  kappas.push_back(k4);
  const auto loss = converter::sweep_conversion(pulse, cav, converter::SweepAxis::kIntrinsicLoss, kappas);
  const double t = seconds_since(t0);
  double ledger = 0.0;
  for (const auto& p : timing) ledger = std::max(ledger, p.ledger_error);
  for (const auto& p : loss) ledger = std::max(ledger, p.ledger_error);
  const double p0 = timing[10].efficiency;
  const double pm = timing.front().efficiency, pp = timing.back().efficiency;
  const double pq = loss.back().efficiency;
  const bool ok = p0 >= 0.95 && std::min(pm, pp) >= 0.70 && std::abs(pq - 0.50) <= 0.03 &&
                  ledger < 1e-6 && t < 300.0;
  return {ok, fmt("P(0)=%.4f P(-tau)=%.4f P(+tau)=%.4f (want >=0.70) P(Q=4e6)=%.4f ledger=%.1e sweeps %.1fs",
                  p0, pm, pp, pq, ledger, t)};
}

// 8. Rate scaling with eta.
Outcome c08() {
  double slope[2];
  const std::int64_t ks[2] = {10, 10'000'000};
  for (int i = 0; i < 2; ++i) {
    auto p = satellite(ks[i], 60e-3, std::nullopt);
    auto rate = [&](double eta) {
      const double s = std::sqrt(eta);
      return link::entanglement_rate(p, link::Channel{s, 1.0 - s, 0.0}).rate;
    };
    slope[i] = std::log(rate(1e-5) / rate(1e-8)) / std::log(1e3);
  }
  return {std::abs(slope[0] - 0.5) <= 0.05 && std::abs(slope[1] - 1.0) <= 0.05,
          fmt("slope(k=10)=%.4f slope(k=1e7)=%.4f", slope[0], slope[1])};
}

// 9. Headline rate at 100 km, 40 dB, eps 1e-2, k 100.
Outcome c09() {
  const auto r = link::entanglement_rate(satellite(100, 0.5e-3, 1e-2), link::LinkBudget{});
  return {r.rate > 10.0, fmt("rate=%.4g Hz (N_max=%lld, sqrt_eta=%.4g)", r.rate,
                             static_cast<long long>(r.n_max), r.sqrt_eta)};
}

// 10. Plateau consistency.
Outcome c10() {
  link::LinkBudget b40, b50;
  b50.atmospheric_total = 50.0;
  const auto p = satellite(1'000'000'000, 0.5e-3, 1e-2);
  const double a40 = link::rate_asymptote(b40, p.tau0);
  const double a50 = link::rate_asymptote(b50, p.tau0);
  const double g40 = link::entanglement_rate(p, b40).rate;
  const double g50 = link::entanglement_rate(p, b50).rate;
  const double ratio = a40 / a50;
  const bool ok = std::abs(g40 / a40 - 1.0) < 0.01 && std::abs(g50 / a50 - 1.0) < 0.01 &&
                  ratio > 10.0 / 1.5 && ratio < 10.0 * 1.5;
  return {ok, fmt("plateau40=%.5g vs rate(k=1e9)=%.5g, plateau50=%.5g vs %.5g, ratio=%.3f", a40, g40,
                  a50, g50, ratio)};
}

// 11. MZI tree, ground-only network and mode saturation.
Outcome c11() {
  std::ostringstream os;
  bool ok = true;
  // MZI tree against the fixed interposer.
  link::LinkBudget fixed, tree;
  tree.switch_model = link::SwitchModel::kMziTree;
  double worst = 0.0;
  std::int64_t worst_k = 0;
  for (auto k : link::log_k_grid(2, 1000, 8)) {
    const auto p = satellite(k, 60e-3, 1e-2);
    const double d = std::abs(link::entanglement_rate(p, tree).rate / link::entanglement_rate(p, fixed).rate - 1.0);
    if (d > worst) { worst = d; worst_k = k; }
  }
  const auto p5 = satellite(100'000, 60e-3, 1e-2);
  const double r5 = link::entanglement_rate(p5, tree).rate / link::entanglement_rate(p5, fixed).rate;
  const bool mzi_ok = worst <= 0.10 && r5 <= 0.80;
  ok &= mzi_ok;
  os << fmt("mzi: max dev k<=1e3 %.3f at k=%lld, ratio(1e5)=%.3f [%s]; ", worst,
            static_cast<long long>(worst_k), r5, mzi_ok ? "ok" : "fail");
  // Ground-only ZALM/SPDC at k = 10.
  const auto& r = reference();
  auto pg = satellite(10, 30e-3, 1e-3);
  const auto ground = link::ground_only_scenario(50.0, {50, 60, 70, 80}, pg, r.zalm_model(), r.spdc_model(), {10});
  double min_ratio = 1e300;
  for (const auto& g : ground) min_ratio = std::min(min_ratio, g.points[0].zalm / g.points[0].spdc);
  const bool ground_ok = min_ratio >= 10.0;
  ok &= ground_ok;
  os << fmt("ground ratio(k=10) min %.3f [%s]; ", min_ratio, ground_ok ? "ok" : "fail");
  // Mode saturation.
  const std::vector<int> modes{100, 200, 400, 800, 1600, 3200};
  const double pgen4 = source::p_gen(r.spdc, detectors(), source::accepted_patterns());
  const auto low = link::rate_vs_modes(satellite(10'000, 60e-3, 1e-2), link::LinkBudget{}, pgen4,
                                       r.spdc.rep_rate, modes);
  const auto high = link::rate_vs_modes(satellite(1'000'000, 60e-3, 1e-2), link::LinkBudget{}, pgen4,
                                        r.spdc.rep_rate, modes);
  double spread = 0.0;
  bool mono = true;
  for (std::size_t i = 1; i < modes.size(); ++i) {
    spread = std::max(spread, std::abs(low[i].rate / low[0].rate - 1.0));
    mono &= high[i].rate > high[i - 1].rate;
  }
  const bool modes_ok = spread < 0.01 && mono;
  ok &= modes_ok;
  os << fmt("modes: spread(k=1e4)=%.2e monotone(k=1e6)=%d [%s]", spread, mono ? 1 : 0,
            modes_ok ? "ok" : "fail");
  return {ok, os.str()};
}

// 12. Analytic rate against the discrete-event oracle.
Outcome c12() {
  const auto t0 = std::chrono::steady_clock::now();
  struct Case {
    std::int64_t k;
    double s;
  };
  std::vector<Case> cases;
  for (std::int64_t k : {2, 10, 100}) {
    for (double s : {0.5, 0.2, 0.05}) cases.push_back({k, s});
  }
  std::vector<double> z(cases.size());
  std::vector<std::int64_t> succ(cases.size());
  parallel_for(cases.size(), [&](std::size_t i) {
    link::RepeaterParams p;
    p.k = cases[i].k;
    p.tau0 = 1.0;
    p.tau_comm = 150.0;
    p.tau_reset = 50.0;
    p.epsilon = 1e-2;
    p.xi = 0.5;
    p.f_tele = reference().f_zalm;
    const link::Channel ch{cases[i].s, 0.7 * (1.0 - cases[i].s), 0.3 * (1.0 - cases[i].s)};
    link::DesOptions o;
    o.horizon = 1e6 * p.tau0;  // 1e6 source shots
    o.seed = 1000 + i;
    const double want = link::entanglement_rate(p, ch).rate;
    const auto des = link::des_oracle(p, ch, o);
    z[i] = std::abs(des.rate - want) / des.stderr_rate;
    succ[i] = des.successes;
  });
  const double t = seconds_since(t0);
  const double zmax = *std::max_element(z.begin(), z.end());
  const auto smin = *std::min_element(succ.begin(), succ.end());
  return {zmax <= 3.0 && t < 300.0,
          fmt("max |des-analytic|/stderr=%.2f over 9 points, min successes %lld, %.1fs", zmax,
              static_cast<long long>(smin), t)};
}

// 13. Randomized property suites, 1000 cases each.
Outcome c13() {
  using fock::ModeLabel;
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g;
  constexpr int kCases = 1000;
  std::ostringstream os;
  bool ok = true;
  auto M = [](int i) { return ModeLabel::from_ordinal(i); };
  auto random_mixed = [&](const fock::BasisPtr& b) {
    fock::CMatrix rho = fock::CMatrix::Zero(b->dim(), b->dim());
    for (int r = 0; r < 3; ++r) {
      fock::CVector v(b->dim());
      for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = fock::cplx(g(rng), g(rng));
      v.normalize();
      rho += u(rng) * v * v.adjoint();
    }
    return fock::TruncatedState(b, rho / rho.trace().real(), 0.0);
  };
  auto report = [&](const char* name, int bad) {
    os << name << " " << (kCases - bad) << "/" << kCases << "; ";
    ok &= bad == 0;
  };

  // POVM completeness of threshold detectors.
  {
    auto b = fock::make_basis({M(0), M(1), M(2)}, 3);
    int bad = 0;
    for (int k = 0; k < kCases; ++k) {
      const auto s = random_mixed(b);
      fock::DetectorMap dm{{M(1), {u(rng), 0.1 * u(rng)}}};
      const auto c = fock::measure_threshold(s, dm, {{M(1), fock::Click::kClick}});
      const auto n = fock::measure_threshold(s, dm, {{M(1), fock::Click::kNoClick}});
      bad += std::abs(c.probability + n.probability - 1.0) > 1e-12;
    }
    report("povm", bad);
  }
  // Trace and positivity under beam splitters and loss.
  {
    auto b = fock::make_basis({M(0), M(1), M(2)}, 3);
    int bad = 0;
    for (int k = 0; k < kCases; ++k) {
      const auto s = random_mixed(b);
      const auto bs = fock::apply_beam_splitter(s, M(k % 3), M((k + 1) % 3), u(rng), 6.3 * u(rng));
      const auto l = fock::apply_loss(bs, M(k % 3), u(rng));
      bad += std::abs(bs.trace() - 1.0) > 1e-12 || std::abs(l.trace() - 1.0) > 1e-12 ||
             bs.min_eigenvalue() < -1e-12 || l.min_eigenvalue() < -1e-12;
    }
    report("trace/positivity", bad);
  }
  // Visibility equals Schmidt purity.
  {
    int bad = 0;
    for (int k = 0; k < kCases; ++k) {
      const int n = 16 + static_cast<int>(rng() % 9);
      spectral::JointSpectralAmplitude j;
      j.grid_s = j.grid_i = spectral::FrequencyGrid{0.0, 1.0, n};
      j.values.resize(n, n);
      for (int a = 0; a < n; ++a)
        for (int c = 0; c < n; ++c) j.values(a, c) = {g(rng), g(rng)};
      j = spectral::normalize(j);
      bad += std::abs(spectral::visibility(j) - spectral::schmidt_decompose(j).purity()) > 1e-6;
    }
    report("visibility=purity", bad);
  }
  // Gate norm ledger.
  {
    int bad = 0;
    auto disk = [&] { return std::polar(std::sqrt(u(rng)), 6.283185307179586 * u(rng)); };
    for (int k = 0; k < kCases; ++k) {
      const auto gate = spin::cz_gate(disk(), disk());
      Eigen::Vector2cd ph(fock::cplx(g(rng), g(rng)), fock::cplx(g(rng), g(rng)));
      ph.normalize();
      const double s = gate.success_probability(ph), l = gate.lost_probability(ph);
      bad += s < -1e-12 || l < -1e-12 || std::abs(s + l - 1.0) > 1e-10;
    }
    report("gate ledger", bad);
  }
  // Teleported fidelity in [0.25, 1] over the full parameter domain,
  // cooperativity included down to zero.
  {
    int bad = 0, bad_overlap = 0;
    for (int k = 0; k < kCases; ++k) {
      source::FidelityConfig cfg;
      const double n = 1e-4 + 0.2 * u(rng);
      cfg.visibility = u(rng);
      cfg.cooperativity = 1000.0 * u(rng) * u(rng);
      cfg.kwg_over_kappa = 0.5 + 0.5 * u(rng);
      cfg.detector_efficiency = 0.5 + 0.5 * u(rng);
      cfg.detector_dark_prob = 1e-3 * u(rng);
      cfg.dark_rate = 1e7 * u(rng);
      cfg.station_efficiency = 0.2 + 0.8 * u(rng);
      cfg.dark_model = u(rng) < 0.5 ? spin::DarkModel::kPaper : spin::DarkModel::kConditional;
      const auto pat = source::accepted_patterns()[rng() % 4];
      const auto r = source::zalm_fidelity(n, cfg, pat);
      const bool in_range = r.fidelity >= 0.25 - 1e-9 && r.fidelity <= 1.0 + 1e-9;
      bad += !in_range;
      // Diagnostic: the floor holds whenever the gate keeps Bell overlap >= 1/4.
      if (r.bell_overlap >= 0.25) bad_overlap += !in_range;
    }
    report("F in [0.25,1]", bad);
    os << "(floor violations with Bell overlap >= 1/4: " << bad_overlap << ")";
  }
  return {ok, os.str()};
}

const std::vector<std::function<Outcome()>>& criteria() {
  static const std::vector<std::function<Outcome()>> c = {c01, c02, c03, c04, c05, c06, c07,
                                                          c08, c09, c10, c11, c12, c13};
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zalmsim acceptance criteria"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "Criterion number (repeatable); default all")
      ->check(CLI::Range(1, static_cast<int>(criteria().size())));
  CLI11_PARSE(app, argc, argv);
  if (selected.empty()) {
    for (std::size_t i = 1; i <= criteria().size(); ++i) selected.push_back(static_cast<int>(i));
  }
  bool all = true;
  for (int n : selected) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria()[n - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("criterion %02d: %s  %s  [t=%.2fs]\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
    all &= o.pass;
  }
  return all ? 0 : 1;
}
