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

// Cavity-reflection spin-photon gate and photon-to-spin teleportation.
//
// Spin basis order is (down, up). A dual-rail photon alpha|H> + beta|V> is
// written as the pair (alpha, beta); H maps to down and V to up.

#ifndef ZALM_SPIN_HPP_
#define ZALM_SPIN_HPP_

#include <Eigen/Dense>

#include <array>
#include <complex>

#include "zalm/fock.hpp"

namespace zalm::spin {

using cplx = std::complex<double>;

struct AtomCavityParams {
  double g = 0.0;         // rad/s
  double gamma = 1.0;     // rad/s
  double kappa = 1.0;     // rad/s
  double kappa_wg = 1.0;  // rad/s
  double delta_a = 0.0;   // rad/s
  double delta_c = 0.0;   // rad/s

  double cooperativity() const { return 4.0 * g * g / (kappa * gamma); }
  void validate() const;

  // On-resonance parameters with the given cooperativity and coupling ratio.
  static AtomCavityParams from_cooperativity(double c, double kwg_over_kappa);
};

cplx reflection_coeff(const AtomCavityParams& p, bool coupled);

class CzGate {
 public:
  CzGate(cplx r_on, cplx r_off);

  cplx r_on() const { return r_on_; }
  cplx r_off() const { return r_off_; }

  // Spin amplitudes heralded at output port 0 (A) or 1 (B), before the
  // Hadamard, for photon amplitudes (alpha, beta) and spin (down+up)/sqrt2.
  Eigen::Matrix2cd port_map(int port) const;
  // Full map including Hadamard and the port's Pauli correction; identity
  // for ideal reflections.
  Eigen::Matrix2cd kraus(int port) const;

  // Probability that the photon exits either port, and the booked loss.
  double success_probability(const Eigen::Vector2cd& photon) const;
  double lost_probability(const Eigen::Vector2cd& photon) const;

 private:
  cplx r_on_, r_off_;
};

CzGate cz_gate(cplx r_on, cplx r_off);

enum class BellState { kPhiPlus, kPhiMinus, kPsiPlus, kPsiMinus };

// Pauli on spin B taking the given ideal state to Phi+.
Eigen::Matrix2cd correction_to_phi_plus(BellState s);

enum class DarkModel {
  kPaper,        // dark clicks mix the teleported state after the fact
  kConditional,  // stations herald on clicks, dark or photon
};

struct TeleportInputs {
  fock::TruncatedState rho;  // modes A.s.H, A.s.V, B.s.H, B.s.V
  cplx r_on = 1.0;
  cplx r_off = -1.0;
  double p_dark = 0.0;
  BellState heralded = BellState::kPsiPlus;
  DarkModel dark_model = DarkModel::kPaper;
  double station_efficiency = 1.0;  // conditional model only
  // Fidelity credited to photonic states outside the Bell sector.
  double non_bell_fidelity = 0.25;
};

struct TeleportResult {
  double fidelity = 0.0;
  double w_bell = 0.0;
  double w_not_bell = 0.0;
  double bell_overlap = 0.0;          // <Phi+|U rho U^+|Phi+> in the Bell sector
  double gate_success = 0.0;          // heralded-success probability of both gates
  double gate_lost = 0.0;             // booked loss
};

TeleportResult teleport_fidelity(const TeleportInputs& in);

// Dual-rail two-qubit block (A then B) of a four-mode photonic state.
Eigen::Matrix4cd bell_block(const fock::TruncatedState& rho);

std::array<fock::ModeLabel, 4> station_modes();

}  // namespace zalm::spin

#endif  // ZALM_SPIN_HPP_
