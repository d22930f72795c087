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

#include "zalm/source.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "zalm/error.hpp"

namespace zalm::source {
namespace {

using fock::ModeLabel;

std::vector<ClickTuple> all_patterns() {
  std::vector<ClickTuple> out;
  for (int m = 0; m < 16; ++m) out.push_back({(m >> 3) & 1, (m >> 2) & 1, (m >> 1) & 1, m & 1});
  return out;
}

SpdcParams params(double n) {
  SpdcParams p;
  p.mean_photon_number = n;
  return p;
}

double amp_at(const fock::PureState& s, const std::vector<int>& occ) {
  return std::abs(s.psi(s.basis->index_of(occ)));
}

TEST(SourceState, RejectsBadInputs) {
  EXPECT_THROW(build_source_pure(params(0.01), 3), Error);
  EXPECT_THROW(build_source_pure(params(0.6), 4), Error);
  try {
    build_source_pure(params(0.01), 2);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kPrecondition);
  }
}

TEST(SourceState, VacuumAtZeroPhotonNumber) {
  const auto s = build_source_pure(params(0.0));
  EXPECT_NEAR(std::abs(s.psi(0)), 1.0, 1e-15);
  EXPECT_NEAR(s.psi.squaredNorm(), 1.0, 1e-15);
  EXPECT_NEAR(s.norm_deficit, 0.0, 1e-15);
}

TEST(SourceState, TmsvAmplitudes) {
  // Mode order A.s.H, A.s.V, A.i.H, A.i.V, B.s.H, B.s.V, B.i.H, B.i.V.
  const double n = 0.0294;
  const auto s = build_source_pure(params(n));
  const double vac3 = std::pow(1.0 + n, -3);
  EXPECT_NEAR(std::pow(amp_at(s, {1, 0, 1, 0, 0, 0, 0, 0}), 2) / vac3,
              n / std::pow(1 + n, 2), 1e-14);
  EXPECT_NEAR(std::pow(amp_at(s, {2, 0, 2, 0, 0, 0, 0, 0}), 2) / vac3,
              n * n / std::pow(1 + n, 3), 1e-14);
  EXPECT_NEAR(std::pow(amp_at(s, {0, 0, 0, 0, 0, 1, 0, 1}), 2) / vac3,
              n / std::pow(1 + n, 2), 1e-14);
  // Cross-source product.
  EXPECT_NEAR(std::pow(amp_at(s, {0, 1, 0, 1, 1, 0, 1, 0}), 2),
              std::pow(n / std::pow(1 + n, 2), 2) * std::pow(1 + n, -2), 1e-15);
  // Signals and idlers never appear unpaired.
  EXPECT_EQ(amp_at(s, {1, 0, 0, 1, 0, 0, 0, 0}), 0.0);
}

TEST(SourceState, NormDeficitIsDiscardedTail) {
  for (double n : {1e-3, 0.0294, 0.1}) {
    const auto s = build_source_pure(params(n));
    // P(at most two pairs over four processes) of independent geometrics.
    const double x = n / (1 + n);
    const double kept = std::pow(1 + n, -4) * (1 + 4 * x + 10 * x * x);
    EXPECT_NEAR(s.norm_deficit, 1 - kept, 1e-14);
  }
}

TEST(SourceState, MeanPhotonNumberPerMode) {
  const double n = 0.01;
  const auto rho = build_source_state(params(n));
  for (const auto& m : fock::all_mode_labels())
    EXPECT_NEAR(rho.mean_photon_number(m) / n, 1.0, 0.01) << m.name();
}

TEST(Parity, TableRows) {
  EXPECT_EQ(parity_bits({1, 0, 1, 0}), (Parity{0, 0}));
  EXPECT_EQ(parity_bits({0, 1, 0, 1}), (Parity{0, 1}));
  EXPECT_EQ(parity_bits({0, 1, 1, 0}), (Parity{1, 1}));
  EXPECT_EQ(parity_bits({1, 0, 0, 1}), (Parity{1, 0}));
  EXPECT_FALSE(parity_bits({1, 0, 0, 0}).has_value());
  EXPECT_FALSE(parity_bits({1, 1, 0, 0}).has_value());
}

// Signs of the heralded coherences fix (m1, m2) independently of the table.
TEST(Parity, MatchesHeraldedSigns) {
  const auto an = apply_bsa(build_source_pure(params(1e-3)));
  for (const auto& pat : accepted_patterns()) {
    const auto r = herald(an, uniform_detectors(1.0), pat);
    ASSERT_TRUE(r.accepted);
    ASSERT_TRUE(r.heralded_state.has_value());
    const auto& st = *r.heralded_state;
    const auto& b = st.basis();
    const auto a1b2 = b.index_of({1, 0, 0, 1}), a2b1 = b.index_of({0, 1, 1, 0});
    const auto a1a2 = b.index_of({1, 1, 0, 0}), b1b2 = b.index_of({0, 0, 1, 1});
    const double c12 = st.rho()(a1b2, a2b1).real();
    const double c13 = st.rho()(a1b2, a1a2).real();
    const double c14 = st.rho()(a1b2, b1b2).real();
    const int m1 = c12 < 0 ? 1 : 0;
    const int m2 = c13 < 0 ? 1 : 0;
    EXPECT_EQ(r.parity, (Parity{m1, m2}));
    EXPECT_GT(std::abs(c12), 0.2);
    // B1B2 carries (-1)^(m1 + m2).
    EXPECT_EQ(c14 < 0 ? 1 : 0, (m1 + m2) % 2);
  }
}

TEST(Herald, NonAcceptedPatternIsFlagged) {
  const auto an = apply_bsa(build_source_pure(params(0.03)));
  const auto r = herald(an, uniform_detectors(1.0), {1, 1, 0, 0});
  EXPECT_FALSE(r.accepted);
  EXPECT_THROW(herald(an, uniform_detectors(1.0), {2, 0, 0, 0}), Error);
}

TEST(Herald, VacuumNeverHeralds) {
  const auto an = apply_bsa(build_source_pure(params(0.0)));
  for (const auto& pat : accepted_patterns()) {
    const auto r = herald(an, uniform_detectors(0.9, 0.0), pat);
    EXPECT_EQ(r.herald_probability, 0.0);
    EXPECT_FALSE(r.heralded_state.has_value());
  }
}

TEST(Herald, PureAndMixedPathsAgree) {
  const auto pure = apply_bsa(build_source_pure(params(0.05)));
  const auto mixed = fock::TruncatedState::from_pure(pure.basis, pure.psi, pure.norm_deficit);
  const auto det = uniform_detectors(0.8, 1e-3);
  for (const auto& pat : all_patterns()) {
    const auto a = herald(pure, det, pat, 0.9);
    const auto b = herald(mixed, det, pat, 0.9);
    EXPECT_NEAR(a.herald_probability, b.herald_probability, 1e-14);
    ASSERT_EQ(a.heralded_state.has_value(), b.heralded_state.has_value());
    if (a.heralded_state)
      EXPECT_LT((a.heralded_state->rho() - b.heralded_state->rho()).norm(), 1e-12);
  }
}

TEST(Herald, VisibilityScalesCoherence) {
  const auto an = apply_bsa(build_source_pure(params(0.01)));
  const auto full = herald(an, uniform_detectors(1.0), kReferencePattern, 1.0);
  const auto part = herald(an, uniform_detectors(1.0), kReferencePattern, 0.5);
  const auto& b = full.heralded_state->basis();
  const auto i = b.index_of({1, 0, 0, 1}), j = b.index_of({0, 1, 1, 0});
  EXPECT_NEAR(part.heralded_state->rho()(i, j).real(), 0.5 * full.heralded_state->rho()(i, j).real(), 1e-15);
  EXPECT_NEAR(part.heralded_state->rho()(i, i).real(), full.heralded_state->rho()(i, i).real(), 1e-15);
  EXPECT_THROW(herald(an, uniform_detectors(1.0), kReferencePattern, 1.5), Error);
}

// Property: threshold POVMs over all sixteen patterns resolve the identity,
// and the four accepted patterns herald locally equivalent Bell sectors.
TEST(HeraldProperty, CompletenessAndEquivalentSpectra) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double n = 0.2 * u(rng);
    const auto an = apply_bsa(build_source_pure(params(n)));
    const auto det = uniform_detectors(u(rng), 0.01 * u(rng));
    const double vis = u(rng);
    double total = 0.0;
    for (const auto& pat : all_patterns()) total += herald(an, det, pat, vis).herald_probability;
    ASSERT_NEAR(total, an.psi.squaredNorm(), 1e-9) << "case " << k;

    std::vector<Eigen::Vector4d> spectra;
    for (const auto& pat : accepted_patterns()) {
      const auto r = herald(an, det, pat, vis);
      if (!r.heralded_state) continue;
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(spin::bell_block(*r.heralded_state));
      spectra.push_back(es.eigenvalues());
    }
    for (std::size_t i = 1; i < spectra.size(); ++i)
      ASSERT_LT((spectra[i] - spectra[0]).cwiseAbs().maxCoeff(), 1e-9) << "case " << k;
  }
}

// Independent oracle: expand the source polynomial in creation operators,
// push the idler operators through the analyzer, and sum Fock branches.
double brute_force_bell_weight(double n, const ClickTuple& pattern) {
  using Mono = std::array<int, 8>;  // A1 A2 B1 B2 D1 D2 D3 D4
  std::map<Mono, std::complex<double>> poly;
  const double s = 1.0 / std::sqrt(2.0);
  // Idler images (D1..D4 weights): A.i.H -> D3,D4; A.i.V -> D1,D2; B.i.H; B.i.V.
  const std::array<std::array<double, 4>, 4> idler = {{
      {0, 0, s, -s},  // A.i.H
      {s, -s, 0, 0},  // A.i.V
      {0, 0, s, s},   // B.i.H
      {s, s, 0, 0},   // B.i.V
  }};
  const std::array<int, 4> signal = {0, 1, 2, 3};  // A1, A2, B1, B2
  auto fact = [](int k) { return std::tgamma(k + 1.0); };
  for (int k0 = 0; k0 <= 2; ++k0)
    for (int k1 = 0; k0 + k1 <= 2; ++k1)
      for (int k2 = 0; k0 + k1 + k2 <= 2; ++k2)
        for (int k3 = 0; k0 + k1 + k2 + k3 <= 2; ++k3) {
          const std::array<int, 4> ks = {k0, k1, k2, k3};
          // Product over processes of (c_k / k!) (a_s^+ a_i^+)^k.
          std::map<Mono, std::complex<double>> term;
          term[Mono{}] = 1.0;
          for (int p = 0; p < 4; ++p) {
            const double c = tmsv_amplitude(n, ks[p]) / fact(ks[p]);
            for (int rep = 0; rep < ks[p]; ++rep) {
              std::map<Mono, std::complex<double>> next;
              for (const auto& [m, a] : term)
                for (int d = 0; d < 4; ++d) {
                  if (idler[p][d] == 0.0) continue;
                  Mono mm = m;
                  mm[signal[p]] += 1;
                  mm[4 + d] += 1;
                  next[mm] += a * idler[p][d];
                }
              term.swap(next);
            }
            for (auto& [m, a] : term) a *= c;
          }
          for (const auto& [m, a] : term) poly[m] += a;
        }
  double bell = 0.0, all = 0.0;
  for (const auto& [m, a] : poly) {
    bool ok = true;
    for (int d = 0; d < 4; ++d) ok = ok && ((m[4 + d] > 0) == (pattern[d] == 1));
    if (!ok) continue;
    double norm = 1.0;
    for (int e : m) norm *= fact(e);
    const double w = std::norm(a) * norm;
    all += w;
    const int na = m[0] + m[1], nb = m[2] + m[3];
    if (na == 1 && nb == 1) bell += w;
  }
  return bell / all;
}

TEST(Herald, BellWeightMatchesBranchEnumeration) {
  const auto an = apply_bsa(build_source_pure(params(2.94e-2)));
  for (const auto& pat : accepted_patterns()) {
    const auto r = herald(an, uniform_detectors(1.0), pat);
    EXPECT_NEAR(bell_sector_weight(*r.heralded_state), brute_force_bell_weight(2.94e-2, pat), 1e-12);
  }
}

TEST(Herald, SmallNLimitIsHeraldedBellState) {
  const auto an = apply_bsa(build_source_pure(params(1e-4)));
  for (const auto& pat : accepted_patterns()) {
    const auto r = herald(an, uniform_detectors(1.0), pat);
    Eigen::Matrix4cd blk = spin::bell_block(*r.heralded_state);
    blk /= blk.trace().real();
    // Index 2a + b with H = 0: Psi = (|HV> +- |VH>)/sqrt2.
    Eigen::Vector4cd psi(0, 1, heralded_bell_state(r.parity) == spin::BellState::kPsiPlus ? 1 : -1, 0);
    psi /= std::sqrt(2.0);
    EXPECT_GT((psi.adjoint() * blk * psi)(0, 0).real(), 0.999);
  }
}

TEST(Rates, PGenReference) {
  const double pg = p_gen(params(2.94e-2), uniform_detectors(1.0), {kReferencePattern});
  EXPECT_NEAR(pg / 3.6e-4, 1.0, 0.2);
  // Closed form for one pattern with ideal detectors: N^2 / (2 (1+N)^6).
  const double n = 2.94e-2;
  EXPECT_NEAR(pg, n * n / (2 * std::pow(1 + n, 6)), 1e-15);
  EXPECT_EQ(p_gen(params(0.0), uniform_detectors(1.0), accepted_patterns()), 0.0);
  const double all4 = p_gen(params(2.94e-2), uniform_detectors(1.0), accepted_patterns());
  EXPECT_NEAR(all4, 4 * pg, 1e-15);
}

TEST(Rates, PGenQuadraticSlope) {
  std::vector<double> x, y;
  for (int i = 0; i <= 10; ++i) {
    const double n = 1e-3 * std::pow(10.0, i / 10.0);
    x.push_back(std::log(n));
    y.push_back(std::log(p_gen(params(n), uniform_detectors(1.0), {kReferencePattern})));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  EXPECT_NEAR(sxy / sxx, 2.0, 0.05);
}

TEST(Rates, PZalm) {
  EXPECT_NEAR(p_zalm(3.6e-4, 800), 0.25, 0.001);
  EXPECT_DOUBLE_EQ(p_zalm(3.6e-4, 1), 3.6e-4);
  EXPECT_EQ(p_zalm(0.0, 800), 0.0);
  EXPECT_THROW(p_zalm(0.1, 0), Error);
  EXPECT_THROW(p_zalm(1.1, 3), Error);
  EXPECT_EQ(params(0.01).n_modes(), 800);
}

TEST(Rates, PZalmMonteCarlo) {
  const double pg = 3.6e-4;
  const int modes = 800, trials = 1000000;
  std::mt19937_64 rng(37);
  std::binomial_distribution<int> channels(modes, pg);
  int hits = 0;
  for (int t = 0; t < trials; ++t) hits += channels(rng) > 0;
  const double p = p_zalm(pg, modes);
  const double sigma = std::sqrt(p * (1 - p) / trials);
  EXPECT_NEAR(static_cast<double>(hits) / trials, p, 3 * sigma);
}

TEST(RatesProperty, PZalmMonotone) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1e-2);
  std::uniform_int_distribution<int> m(1, 2000);
  for (int k = 0; k < 1000; ++k) {
    const double a = u(rng), b = u(rng);
    const int x = m(rng), y = m(rng);
    const double lo = std::min(a, b), hi = std::max(a, b);
    EXPECT_LE(p_zalm(lo, std::min(x, y)), p_zalm(hi, std::min(x, y)) + 1e-16);
    EXPECT_LE(p_zalm(lo, std::min(x, y)), p_zalm(lo, std::max(x, y)) + 1e-16);
  }
}

TEST(Rates, EmissionRate) {
  SpdcParams p;
  EXPECT_NEAR(emission_rate(p, 0.25), 7.5e9, 1.0);
  EXPECT_EQ(emission_rate(p, 0.0), 0.0);
  EXPECT_NEAR(emission_rate(p, 2.5e-3), 75e6, 1e-3);
}

TEST(Rates, Pileup) {
  SpdcParams p;
  const auto r = detector_pileup(p, 1e-9, 7.45e9);
  EXPECT_NEAR(r.mean_occupancy, 2.328e-3, 1e-6);
  EXPECT_NEAR(r.p_multi / 2.7e-6, 1.0, 0.02);
  const double mu = r.mean_occupancy;
  // Leading term is off by 2 mu / 3; the next order closes it.
  EXPECT_NEAR(r.p_multi / (mu * mu / 2 - mu * mu * mu / 3), 1.0, 1e-5);
  EXPECT_LT(detector_pileup(p, 1e-15, 7.45e9).p_multi, 1e-17);
  EXPECT_THROW(detector_pileup(p, 0.0, 1e9), Error);
}

TEST(FreeRunning, StateStatistics) {
  const double n = 0.02;
  const auto rho = free_running_state(n);
  EXPECT_NEAR(bell_sector_weight(rho), 2 * n / std::pow(1 + n, 3), 1e-15);
  EXPECT_NEAR(bell_sector_weight(free_running_state(1e-9)), 0.0, 1e-8);
  EXPECT_THROW(free_running_state(0.5), Error);
}

TEST(FreeRunning, ZeroCreditReproducesReportedBaseline) {
  FidelityConfig cfg;
  cfg.non_bell_fidelity = 0.0;
  const auto r = free_running_spdc(params(0.01), 12.5e9, cfg);
  ASSERT_TRUE(r.found);
  EXPECT_NEAR(r.ns_required / 1.27e-3, 1.0, 0.2);
  EXPECT_NEAR(r.p_spdc / 2.5e-3, 1.0, 0.2);
  EXPECT_NEAR(r.rate, r.p_spdc * 30e9, 1e-3);
}

TEST(FreeRunning, DefaultCrossingRegression) {
  const auto r = free_running_spdc(params(0.01), 12.5e9, FidelityConfig{});
  ASSERT_TRUE(r.found);
  EXPECT_NEAR(r.ns_required, 1.6956e-3, 2e-7);
  EXPECT_NEAR(free_running_fidelity(r.ns_required, FidelityConfig{}).fidelity, 0.998, 1e-9);
}

TEST(FreeRunning, ConditionalDarkModelHasInteriorMaximum) {
  FidelityConfig cfg;
  cfg.dark_model = spin::DarkModel::kConditional;
  const auto r = free_running_spdc(params(0.01), 12.5e9, cfg);
  EXPECT_GT(r.ns_at_max, r.curve.front().n_mean);
  EXPECT_LT(r.ns_at_max, r.curve.back().n_mean);
  EXPECT_LT(r.curve.front().fidelity, r.max_fidelity);
  EXPECT_LT(r.curve.back().fidelity, r.max_fidelity);
}

TEST(FreeRunning, UnreachableTarget) {
  const auto r = free_running_spdc(params(0.01), 12.5e9, FidelityConfig{}, 0.99999);
  EXPECT_FALSE(r.found);
  EXPECT_GT(r.max_fidelity, 0.99);
  EXPECT_THROW(free_running_spdc(params(0.01), 0.0, FidelityConfig{}), Error);
}

TEST(Curves, ZalmAboveFreeRunningAndHighAtEightPercent) {
  FidelityConfig cfg;
  EXPECT_GE(zalm_fidelity(8e-2, cfg).fidelity, 0.995);
  for (double n : {1e-2, 5e-2})
    EXPECT_GT(zalm_fidelity(n, cfg).fidelity, free_running_fidelity(n, cfg).fidelity);
  // Without a visibility penalty the free-running source wins at small N.
  EXPECT_LT(zalm_fidelity(1e-3, cfg).fidelity, free_running_fidelity(1e-3, cfg).fidelity);
  EXPECT_THROW(fidelity_vs_ns(SourceKind::kZalm, {0.6}, cfg), Error);
}

}  // namespace
}  // namespace zalm::source
