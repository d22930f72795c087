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

#include <cmath>

#include "zalm/error.hpp"

namespace zalm::spin {
namespace {

const cplx kI(0.0, 1.0);

Eigen::Matrix2cd hadamard() {
  Eigen::Matrix2cd h;
  h << 1, 1, 1, -1;
  return h / std::sqrt(2.0);
}

Eigen::Matrix2cd pauli_x() {
  Eigen::Matrix2cd x;
  x << 0, 1, 1, 0;
  return x;
}

Eigen::Matrix2cd pauli_z() {
  Eigen::Matrix2cd z;
  z << 1, 0, 0, -1;
  return z;
}

Eigen::Matrix4cd kron(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
  Eigen::Matrix4cd k;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) k.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return k;
}

}  // namespace

void AtomCavityParams::validate() const {
  if (!(gamma > 0 && kappa > 0)) throw Error(ErrorKind::kDomain, "gamma and kappa must be positive");
  if (kappa_wg < 0 || kappa_wg > kappa * (1 + 1e-12))
    throw Error(ErrorKind::kDomain, "kappa_wg must lie in [0, kappa]");
}

AtomCavityParams AtomCavityParams::from_cooperativity(double c,
                                                      double kwg_over_kappa) {
  if (c < 0) throw Error(ErrorKind::kDomain, "cooperativity must be non-negative");
  AtomCavityParams p;
  p.kappa = 1.0;
  p.gamma = 1.0;
  p.g = std::sqrt(c * p.kappa * p.gamma / 4.0);
  p.kappa_wg = kwg_over_kappa * p.kappa;
  p.validate();
  return p;
}

cplx reflection_coeff(const AtomCavityParams& p, bool coupled) {
  p.validate();
  const double g = coupled ? p.g : 0.0;
  const cplx atom = kI * p.delta_a + p.gamma / 2.0;
  const cplx cav = kI * p.delta_c + p.kappa / 2.0;
  return 1.0 - p.kappa_wg * atom / (cav * atom + g * g);
}

CzGate::CzGate(cplx r_on, cplx r_off) : r_on_(r_on), r_off_(r_off) {
  if (std::abs(r_on) > 1.0 + 1e-12 || std::abs(r_off) > 1.0 + 1e-12)
    throw Error(ErrorKind::kDomain, "reflection magnitudes must not exceed 1");
}

CzGate cz_gate(cplx r_on, cplx r_off) { return CzGate(r_on, r_off); }

Eigen::Matrix2cd CzGate::port_map(int port) const {
  Eigen::Matrix2cd m;
  if (port == 0) {
    m << r_on_, -kI, r_off_, -kI;
  } else if (port == 1) {
    m << kI * r_on_, -1.0, kI * r_off_, -1.0;
  } else {
    throw Error(ErrorKind::kStructural, "gate port must be 0 or 1");
  }
  return 0.5 * m;
}

Eigen::Matrix2cd CzGate::kraus(int port) const {
  Eigen::Matrix2cd corr;
  if (port == 0) {
    corr << 1, 0, 0, kI;
  } else {
    corr << -kI, 0, 0, -1.0;
  }
  return corr * pauli_x() * hadamard() * port_map(port);
}

double CzGate::success_probability(const Eigen::Vector2cd& photon) const {
  return (kraus(0) * photon).squaredNorm() + (kraus(1) * photon).squaredNorm();
}

double CzGate::lost_probability(const Eigen::Vector2cd& photon) const {
  return photon.squaredNorm() - success_probability(photon);
}

Eigen::Matrix2cd correction_to_phi_plus(BellState s) {
  switch (s) {
    case BellState::kPhiPlus: return Eigen::Matrix2cd::Identity();
    case BellState::kPhiMinus: return pauli_z();
    case BellState::kPsiPlus: return pauli_x();
    case BellState::kPsiMinus: return pauli_z() * pauli_x();
  }
  return Eigen::Matrix2cd::Identity();
}

std::array<fock::ModeLabel, 4> station_modes() {
  using fock::Branch;
  using fock::Pol;
  using fock::Source;
  return {fock::ModeLabel{Source::kA, Branch::kSignal, Pol::kH},
          fock::ModeLabel{Source::kA, Branch::kSignal, Pol::kV},
          fock::ModeLabel{Source::kB, Branch::kSignal, Pol::kH},
          fock::ModeLabel{Source::kB, Branch::kSignal, Pol::kV}};
}

namespace {

struct Sectors {
  // weight[nA][nB]
  std::vector<std::vector<double>> weight;
  int max_n = 0;
};

Sectors sector_weights(const fock::TruncatedState& rho) {
  const auto& b = rho.basis();
  const auto modes = station_modes();
  std::array<int, 4> pos;
  for (int k = 0; k < 4; ++k) pos[k] = b.position(modes[k]);
  Sectors s;
  s.max_n = b.cutoff();
  s.weight.assign(s.max_n + 1, std::vector<double>(s.max_n + 1, 0.0));
  for (std::size_t st = 0; st < b.dim(); ++st) {
    const int na = b.occupation(st, pos[0]) + b.occupation(st, pos[1]);
    const int nb = b.occupation(st, pos[2]) + b.occupation(st, pos[3]);
    s.weight[na][nb] += rho.rho()(st, st).real();
  }
  return s;
}

}  // namespace

Eigen::Matrix4cd bell_block(const fock::TruncatedState& rho) {
  const auto& b = rho.basis();
  const auto modes = station_modes();
  std::array<int, 4> pos;
  for (int k = 0; k < 4; ++k) pos[k] = b.position(modes[k]);
  std::array<long, 4> idx;
  for (int qa = 0; qa < 2; ++qa)
    for (int qb = 0; qb < 2; ++qb) {
      std::vector<int> occ(b.num_modes(), 0);
      occ[pos[qa]] = 1;
      occ[pos[2 + qb]] = 1;
      idx[2 * qa + qb] = b.index_of(occ);
    }
  Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      if (idx[r] >= 0 && idx[c] >= 0) m(r, c) = rho.rho()(idx[r], idx[c]);
  return m;
}

TeleportResult teleport_fidelity(const TeleportInputs& in) {
  if (!(in.p_dark >= 0.0 && in.p_dark <= 1.0))
    throw Error(ErrorKind::kDomain, "dark-count probability must lie in [0,1]");
  if (!(in.non_bell_fidelity >= 0.0 && in.non_bell_fidelity <= 1.0))
    throw Error(ErrorKind::kDomain, "non-Bell fidelity must lie in [0,1]");
  if (!(in.station_efficiency >= 0.0 && in.station_efficiency <= 1.0))
    throw Error(ErrorKind::kDomain, "station efficiency must lie in [0,1]");
  const CzGate gate(in.r_on, in.r_off);
  TeleportResult out;

  // Bell-sector overlap after both gates and the Pauli frame.
  Eigen::Matrix4cd block = bell_block(in.rho);
  const double bt = block.trace().real();
  if (bt > 0.0) {
    block /= bt;
    const Eigen::Matrix2cd fix = correction_to_phi_plus(in.heralded);
    Eigen::Matrix4cd sigma = Eigen::Matrix4cd::Zero();
    for (int p = 0; p < 2; ++p)
      for (int q = 0; q < 2; ++q) {
        const Eigen::Matrix4cd k = kron(gate.kraus(p), fix * gate.kraus(q));
        sigma += k * block * k.adjoint();
      }
    Eigen::Vector4cd phi(1, 0, 0, 1);
    phi /= std::sqrt(2.0);
    out.gate_success = sigma.trace().real();
    out.gate_lost = 1.0 - out.gate_success;
    out.bell_overlap = out.gate_success > 0.0
                           ? (phi.adjoint() * sigma * phi)(0, 0).real() / out.gate_success
                           : 0.25;
  } else {
    out.bell_overlap = 0.25;
  }

  const Sectors s = sector_weights(in.rho);
  const double p = in.p_dark;
  if (in.dark_model == DarkModel::kPaper) {
    double both = 0.0;
    for (int a = 1; a <= s.max_n; ++a)
      for (int b = 1; b <= s.max_n; ++b) both += s.weight[a][b];
    if (!(both > 0.0))
      throw Error(ErrorKind::kUnnormalizable, "no photon reaches both stations");
    out.w_bell = s.weight[1][1] / both;
    out.w_not_bell = 1.0 - out.w_bell;
    const double f0 = out.w_bell * out.bell_overlap + out.w_not_bell * in.non_bell_fidelity;
    out.fidelity = f0 * (1 - p) * (1 - p) + (2 * (1 - p) * p + p * p) / 4.0;
    return out;
  }

  const double eta = in.station_efficiency;
  auto click = [&](int n) { return 1.0 - (1.0 - p) * std::pow(1.0 - eta, n); };
  double total = 0.0;
  for (int a = 0; a <= s.max_n; ++a)
    for (int b = 0; b <= s.max_n; ++b) total += s.weight[a][b] * click(a) * click(b);
  if (!(total > 0.0))
    throw Error(ErrorKind::kUnnormalizable, "stations never herald");
  const double good = s.weight[1][1] * eta * eta;
  out.w_bell = good / total;
  out.w_not_bell = 1.0 - out.w_bell;
  out.fidelity = out.w_bell * out.bell_overlap + out.w_not_bell * in.non_bell_fidelity;
  return out;
}

}  // namespace zalm::spin
