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

#include "zalm/spin.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "zalm/error.hpp"
#include "zalm/source.hpp"

namespace zalm::spin {
namespace {

const cplx kI(0.0, 1.0);

cplx random_disk(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = std::sqrt(u(rng));
  const double th = 2 * M_PI * u(rng);
  return std::polar(r, th);
}

Eigen::Vector2cd random_qubit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector2cd v(cplx(n(rng), n(rng)), cplx(n(rng), n(rng)));
  return v.normalized();
}

fock::TruncatedState ket_state(const std::vector<std::pair<std::vector<int>, cplx>>& terms) {
  const auto m = station_modes();
  auto basis = fock::make_basis({m[0], m[1], m[2], m[3]}, 4);
  fock::CVector psi = fock::CVector::Zero(basis->dim());
  for (const auto& [occ, a] : terms) psi(basis->index_of(occ)) = a;
  psi.normalize();
  return fock::TruncatedState::from_pure(basis, psi, 0.0);
}

TEST(Reflection, BareOvercoupledCavityIsMinusOne) {
  auto p = AtomCavityParams::from_cooperativity(0.0, 1.0);
  EXPECT_NEAR(std::abs(reflection_coeff(p, true) - cplx(-1.0)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(reflection_coeff(p, false) - cplx(-1.0)), 0.0, 1e-14);
}

TEST(Reflection, LargeCooperativityLimit) {
  auto p = AtomCavityParams::from_cooperativity(1e9, 1.0);
  EXPECT_NEAR(std::abs(reflection_coeff(p, true) - cplx(1.0)), 0.0, 1e-8);
}

TEST(Reflection, ClosedFormAtC100) {
  auto p = AtomCavityParams::from_cooperativity(100.0, 1.0);
  const cplx r = reflection_coeff(p, true);
  EXPECT_NEAR(r.real(), 99.0 / 101.0, 1e-14);
  EXPECT_NEAR(r.imag(), 0.0, 1e-14);
}

TEST(Reflection, DetunedMagnitudeBounded) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0), pos(0.05, 3.0), f(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    AtomCavityParams p;
    p.g = pos(rng);
    p.gamma = pos(rng);
    p.kappa = pos(rng);
    p.kappa_wg = f(rng) * p.kappa;
    p.delta_a = u(rng);
    p.delta_c = u(rng);
    EXPECT_LE(std::abs(reflection_coeff(p, true)), 1.0 + 1e-12);
    EXPECT_LE(std::abs(reflection_coeff(p, false)), 1.0 + 1e-12);
  }
}

TEST(Reflection, RejectsOvercoupledBeyondKappa) {
  AtomCavityParams p;
  p.kappa_wg = 1.5;
  EXPECT_THROW(reflection_coeff(p, true), Error);
}

TEST(CzGate, RejectsGain) { EXPECT_THROW(cz_gate(1.1, -1.0), Error); }

TEST(CzGate, IdealPortAmplitudes) {
  const auto g = cz_gate(1.0, -1.0);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const auto ph = random_qubit(rng);
    const cplx a = ph(0), b = ph(1);
    const Eigen::Vector2cd minus(1.0, -1.0), plus(1.0, 1.0);
    const Eigen::Vector2cd port_a = 0.5 * (a * minus - kI * b * plus);
    const Eigen::Vector2cd port_b = 0.5 * kI * (a * minus + kI * b * plus);
    EXPECT_LT((g.port_map(0) * ph - port_a).norm(), 1e-14);
    EXPECT_LT((g.port_map(1) * ph - port_b).norm(), 1e-14);
  }
}

TEST(CzGate, IdealKrausIsScaledIdentity) {
  const auto g = cz_gate(1.0, -1.0);
  for (int p = 0; p < 2; ++p)
    EXPECT_LT((g.kraus(p) - Eigen::Matrix2cd::Identity() / std::sqrt(2.0)).norm(), 1e-14);
  EXPECT_THROW(g.port_map(2), Error);
}

TEST(CzGate, EqualReflectionsDecouple) {
  std::mt19937_64 rng(5);
  const Eigen::Vector2cd start = Eigen::Vector2cd(1.0, 1.0) / std::sqrt(2.0);
  for (int k = 0; k < 200; ++k) {
    const cplx r = random_disk(rng);
    const auto g = cz_gate(r, r);
    const auto ph = random_qubit(rng);
    for (int p = 0; p < 2; ++p) {
      const Eigen::Vector2cd out = g.port_map(p) * ph;
      if (out.norm() < 1e-9) continue;
      EXPECT_NEAR(std::norm(start.dot(out.normalized())), 1.0, 1e-12);
    }
  }
}

TEST(CzGate, NormLedgerProperty) {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 1000; ++k) {
    const auto g = cz_gate(random_disk(rng), random_disk(rng));
    const auto ph = random_qubit(rng);
    const double s = g.success_probability(ph), l = g.lost_probability(ph);
    EXPECT_GE(s, -1e-12);
    EXPECT_GE(l, -1e-12);
    EXPECT_NEAR(s + l, 1.0, 1e-10);
  }
}

TEST(CzGate, IdealGateLosesNothing) {
  std::mt19937_64 rng(9);
  const auto g = cz_gate(1.0, -1.0);
  for (int k = 0; k < 50; ++k) EXPECT_NEAR(g.lost_probability(random_qubit(rng)), 0.0, 1e-14);
}

TEST(Teleport, IdealBellStatesGiveUnitFidelity) {
  const double s = 1.0 / std::sqrt(2.0);
  struct Case {
    BellState b;
    cplx sign;
    bool psi;
  };
  for (const auto& c : {Case{BellState::kPsiPlus, 1.0, true}, Case{BellState::kPsiMinus, -1.0, true},
                        Case{BellState::kPhiPlus, 1.0, false}, Case{BellState::kPhiMinus, -1.0, false}}) {
    auto rho = c.psi ? ket_state({{{1, 0, 0, 1}, s}, {{0, 1, 1, 0}, c.sign * s}})
                     : ket_state({{{1, 0, 1, 0}, s}, {{0, 1, 0, 1}, c.sign * s}});
    TeleportInputs in{rho};
    in.heralded = c.b;
    const auto r = teleport_fidelity(in);
    EXPECT_NEAR(r.fidelity, 1.0, 1e-12);
    EXPECT_NEAR(r.w_bell, 1.0, 1e-14);
    EXPECT_NEAR(r.gate_lost, 0.0, 1e-12);
  }
}

TEST(Teleport, WrongFrameIsOrthogonal) {
  const double s = 1.0 / std::sqrt(2.0);
  auto rho = ket_state({{{1, 0, 0, 1}, s}, {{0, 1, 1, 0}, s}});
  TeleportInputs in{rho};
  in.heralded = BellState::kPsiMinus;
  EXPECT_NEAR(teleport_fidelity(in).fidelity, 0.0, 1e-12);
}

TEST(Teleport, PureContaminationGivesQuarter) {
  // Only (2,1) photons: no Bell weight.
  auto rho = ket_state({{{2, 0, 1, 0}, 1.0}});
  const auto r = teleport_fidelity(TeleportInputs{rho});
  EXPECT_NEAR(r.w_not_bell, 1.0, 1e-14);
  EXPECT_NEAR(r.fidelity, 0.25, 1e-14);
}

TEST(Teleport, NoPhotonAtAStationIsUnnormalizable) {
  auto rho = ket_state({{{1, 0, 0, 0}, 1.0}});
  try {
    teleport_fidelity(TeleportInputs{rho});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUnnormalizable);
  }
}

TEST(Teleport, DarkFormulaClosedForm) {
  const double s = 1.0 / std::sqrt(2.0);
  auto rho = ket_state({{{1, 0, 0, 1}, s}, {{0, 1, 1, 0}, s}});
  TeleportInputs in{rho};
  in.p_dark = 0.1;
  EXPECT_NEAR(teleport_fidelity(in).fidelity, 0.81 + (0.18 + 0.01) / 4.0, 1e-14);
}

TEST(Teleport, ReferenceOperatingPoint) {
  source::FidelityConfig cfg;
  const auto r = source::zalm_fidelity(2.94e-2, cfg);
  EXPECT_NEAR(r.fidelity, 0.998, 0.002);
}

// Physically generated inputs: heralded ZALM states under random source,
// detector and gate parameters.
struct RandomScenario {
  source::FidelityConfig cfg;
  double n;
  source::ClickTuple pattern;
};

RandomScenario random_scenario(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RandomScenario s;
  s.n = 1e-4 + 0.2 * u(rng);
  s.cfg.visibility = u(rng);
  s.cfg.cooperativity = 1000.0 * u(rng) * u(rng);
  s.cfg.kwg_over_kappa = 0.5 + 0.5 * u(rng);
  s.cfg.detector_efficiency = 0.5 + 0.5 * u(rng);
  s.cfg.detector_dark_prob = 1e-3 * u(rng);
  s.cfg.dark_rate = 1e7 * u(rng);
  s.cfg.station_efficiency = 0.2 + 0.8 * u(rng);
  s.cfg.dark_model = u(rng) < 0.5 ? DarkModel::kPaper : DarkModel::kConditional;
  s.pattern = source::accepted_patterns()[rng() % 4];
  return s;
}

TEST(TeleportProperty, FidelityWithinMixedFloorAndOne) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    auto s = random_scenario(rng);
    s.cfg.cooperativity = 10.0 + 990.0 * u(rng);
    const double f = source::zalm_fidelity(s.n, s.cfg, s.pattern).fidelity;
    ASSERT_GE(f, 0.25 - 1e-9) << "case " << k;
    ASSERT_LE(f, 1.0 + 1e-9) << "case " << k;
  }
}

// Outside the entangling regime the gate can rotate the Bell sector away
// from the target, so the floor only holds when the overlap is at least 1/4.
TEST(TeleportProperty, FloorTracksBellOverlap) {
  std::mt19937_64 rng(23);
  int below = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto s = random_scenario(rng);
    const auto r = source::zalm_fidelity(s.n, s.cfg, s.pattern);
    ASSERT_GE(r.fidelity, -1e-12);
    ASSERT_LE(r.fidelity, 1.0 + 1e-9);
    if (r.bell_overlap >= 0.25) {
      ASSERT_GE(r.fidelity, 0.25 - 1e-9) << "case " << k;
    } else {
      ++below;
      ASSERT_LT(r.fidelity, 0.25 + 1e-9) << "case " << k;
    }
  }
  EXPECT_GT(below, 0);
}

TEST(Teleport, NonEntanglingGateBreaksFloor) {
  source::FidelityConfig cfg;
  cfg.cooperativity = 0.0;
  EXPECT_LT(source::zalm_fidelity(2.94e-2, cfg).fidelity, 0.25);
}

TEST(TeleportProperty, DarkCountMonotone) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    auto s = random_scenario(rng);
    s.cfg.dark_model = DarkModel::kPaper;
    const double r1 = u(rng), r2 = u(rng);
    s.cfg.dark_rate = 1e8 * std::min(r1, r2);
    const double f_lo = source::zalm_fidelity(s.n, s.cfg, s.pattern).fidelity;
    s.cfg.dark_rate = 1e8 * std::max(r1, r2) + 1.0;
    const double f_hi = source::zalm_fidelity(s.n, s.cfg, s.pattern).fidelity;
    if (f_lo > 0.25 + 1e-12) EXPECT_LT(f_hi, f_lo) << "case " << k;
  }
}

TEST(TeleportProperty, PatternsAgreeAfterCorrection) {
  std::mt19937_64 rng(19);
  for (int k = 0; k < 1000; ++k) {
    const auto s = random_scenario(rng);
    const auto pats = source::accepted_patterns();
    const double f0 = source::zalm_fidelity(s.n, s.cfg, pats[0]).fidelity;
    for (const auto& pat : pats)
      ASSERT_NEAR(source::zalm_fidelity(s.n, s.cfg, pat).fidelity, f0, 1e-9) << "case " << k;
  }
}

}  // namespace
}  // namespace zalm::spin
