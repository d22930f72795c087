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

#include "zalm/fock.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include "zalm/error.hpp"

namespace zalm::fock {
namespace {

constexpr int kBitsPerMode = 4;

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return factorial(n) / (factorial(k) * factorial(n - k));
}

// Compositions of `total` into `parts` non-negative integers, first entry
// largest first.
void compositions(int total, int parts, std::vector<int>& cur,
                  std::vector<std::vector<int>>& out) {
  if (parts == 0) {
    if (total == 0) out.push_back(cur);
    return;
  }
  if (parts == 1) {
    cur.push_back(total);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int first = total; first >= 0; --first) {
    cur.push_back(first);
    compositions(total - first, parts - 1, cur, out);
    cur.pop_back();
  }
}

// Image amplitudes of |p, q> under the two-mode transform, indexed by the
// photon number k left in the first mode (second mode holds p + q - k).
std::vector<cplx> two_mode_images(const Eigen::Matrix2cd& u, int p, int q) {
  const int n = p + q;
  std::vector<cplx> amp(n + 1, cplx(0.0, 0.0));
  for (int a = 0; a <= p; ++a) {
    for (int b = 0; b <= q; ++b) {
      const int k = a + b;
      cplx term = binomial(p, a) * binomial(q, b) * std::pow(u(0, 0), a) *
                  std::pow(u(1, 0), p - a) * std::pow(u(0, 1), b) *
                  std::pow(u(1, 1), q - b);
      amp[k] += term * std::sqrt(factorial(k) * factorial(n - k) /
                                 (factorial(p) * factorial(q)));
    }
  }
  return amp;
}

struct SparseEntry {
  std::size_t out;
  cplx coeff;
};

// Column-wise sparse representation of the transform on the basis.
std::vector<std::vector<SparseEntry>> two_mode_operator(
    const FockBasis& basis, int pi, int pj, const Eigen::Matrix2cd& u) {
  std::vector<std::vector<SparseEntry>> cols(basis.dim());
  std::map<std::pair<int, int>, std::vector<cplx>> cache;
  std::vector<int> occ(basis.num_modes());
  for (std::size_t s = 0; s < basis.dim(); ++s) {
    for (int m = 0; m < basis.num_modes(); ++m) occ[m] = basis.occupation(s, m);
    const int p = occ[pi], q = occ[pj];
    auto key = std::make_pair(p, q);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, two_mode_images(u, p, q)).first;
    const auto& amp = it->second;
    for (int k = 0; k <= p + q; ++k) {
      if (std::abs(amp[k]) == 0.0) continue;
      occ[pi] = k;
      occ[pj] = p + q - k;
      const long idx = basis.index_of(occ);
      cols[s].push_back({static_cast<std::size_t>(idx), amp[k]});
    }
    occ[pi] = p;
    occ[pj] = q;
  }
  return cols;
}

// Returns W * M for the sparse column operator W.
CMatrix apply_left(const std::vector<std::vector<SparseEntry>>& w,
                   const CMatrix& m) {
  CMatrix out = CMatrix::Zero(m.rows(), m.cols());
  for (std::size_t s = 0; s < w.size(); ++s) {
    for (const auto& e : w[s]) out.row(e.out) += e.coeff * m.row(s);
  }
  return out;
}

void check_probability(double value, const char* what) {
  if (!(value >= 0.0 && value <= 1.0)) {
    std::ostringstream os;
    os << what << " must lie in [0,1], got " << value;
    throw Error(ErrorKind::kDomain, os.str());
  }
}

}  // namespace

std::string ModeLabel::name() const {
  std::string s = source == Source::kA ? "A" : "B";
  s += branch == Branch::kSignal ? ".s." : ".i.";
  s += pol == Pol::kH ? "H" : "V";
  return s;
}

ModeLabel ModeLabel::from_ordinal(int ordinal) {
  if (ordinal < 0 || ordinal > 7)
    throw Error(ErrorKind::kStructural, "mode ordinal out of range");
  ModeLabel m;
  m.source = static_cast<Source>(ordinal / 4);
  m.branch = static_cast<Branch>((ordinal / 2) % 2);
  m.pol = static_cast<Pol>(ordinal % 2);
  return m;
}

std::vector<ModeLabel> all_mode_labels() {
  std::vector<ModeLabel> out;
  for (int i = 0; i < 8; ++i) out.push_back(ModeLabel::from_ordinal(i));
  return out;
}

FockBasis::FockBasis(std::vector<ModeLabel> modes, int cutoff)
    : modes_(std::move(modes)), cutoff_(cutoff) {
  if (cutoff < 0 || cutoff >= (1 << kBitsPerMode))
    throw Error(ErrorKind::kDomain, "cutoff must lie in [0, 15]");
  if (modes_.size() > 64 / kBitsPerMode)
    throw Error(ErrorKind::kStructural, "too many modes for packed basis");
  for (std::size_t a = 0; a < modes_.size(); ++a)
    for (std::size_t b = a + 1; b < modes_.size(); ++b)
      if (modes_[a] == modes_[b])
        throw Error(ErrorKind::kStructural, "duplicate mode " + modes_[a].name());
  std::vector<std::vector<int>> states;
  std::vector<int> cur;
  for (int n = 0; n <= cutoff; ++n) compositions(n, num_modes(), cur, states);
  n_states_ = states.size();
  occ_.reserve(n_states_ * modes_.size());
  for (std::size_t s = 0; s < n_states_; ++s) {
    int tot = 0;
    for (int v : states[s]) {
      occ_.push_back(static_cast<std::uint8_t>(v));
      tot += v;
    }
    totals_.push_back(tot);
    lookup_[pack(states[s].data())] = s;
  }
}

std::uint64_t FockBasis::pack(const int* occ) const {
  std::uint64_t key = 0;
  for (std::size_t m = 0; m < modes_.size(); ++m)
    key |= static_cast<std::uint64_t>(occ[m]) << (kBitsPerMode * m);
  return key;
}

int FockBasis::position(const ModeLabel& mode) const {
  for (std::size_t i = 0; i < modes_.size(); ++i)
    if (modes_[i] == mode) return static_cast<int>(i);
  throw Error(ErrorKind::kStructural, "unknown mode label " + mode.name());
}

bool FockBasis::contains(const ModeLabel& mode) const {
  return std::find(modes_.begin(), modes_.end(), mode) != modes_.end();
}

long FockBasis::index_of(const std::vector<int>& occ) const {
  if (occ.size() != modes_.size())
    throw Error(ErrorKind::kStructural, "occupation vector size mismatch");
  int tot = 0;
  for (int v : occ) {
    if (v < 0) return -1;
    tot += v;
  }
  if (tot > cutoff_) return -1;
  auto it = lookup_.find(pack(occ.data()));
  return it == lookup_.end() ? -1 : static_cast<long>(it->second);
}

std::string FockBasis::ket(std::size_t state) const {
  std::ostringstream os;
  os << "|";
  for (int m = 0; m < num_modes(); ++m) {
    if (m) os << ",";
    os << occupation(state, m);
  }
  os << ">";
  return os.str();
}

BasisPtr make_basis(std::vector<ModeLabel> modes, int cutoff) {
  // Bases are immutable, so identical requests share one instance.
  static std::mutex mu;
  static std::map<std::pair<std::vector<ModeLabel>, int>, BasisPtr> cache;
  auto key = std::make_pair(modes, cutoff);
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  auto b = std::make_shared<const FockBasis>(std::move(modes), cutoff);
  std::lock_guard<std::mutex> lock(mu);
  if (cache.size() > 256) cache.clear();
  return cache.emplace(std::move(key), b).first->second;
}

TruncatedState::TruncatedState(BasisPtr basis, CMatrix rho,
                               double norm_deficit)
    : basis_(std::move(basis)), rho_(std::move(rho)),
      norm_deficit_(norm_deficit) {
  if (!basis_) throw Error(ErrorKind::kStructural, "null basis");
  const auto d = static_cast<Eigen::Index>(basis_->dim());
  if (rho_.rows() != d || rho_.cols() != d)
    throw Error(ErrorKind::kStructural, "rho dimension does not match basis");
}

TruncatedState TruncatedState::vacuum(std::vector<ModeLabel> modes,
                                      int cutoff) {
  auto basis = make_basis(std::move(modes), cutoff);
  CMatrix rho = CMatrix::Zero(basis->dim(), basis->dim());
  rho(0, 0) = 1.0;
  return TruncatedState(basis, rho, 0.0);
}

TruncatedState TruncatedState::from_pure(BasisPtr basis, const CVector& psi,
                                         double norm_deficit) {
  if (psi.size() != static_cast<Eigen::Index>(basis->dim()))
    throw Error(ErrorKind::kStructural, "state vector dimension mismatch");
  return TruncatedState(std::move(basis), psi * psi.adjoint(), norm_deficit);
}

double TruncatedState::hermiticity_error() const {
  return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
}

double TruncatedState::min_eigenvalue() const {
  CMatrix h = 0.5 * (rho_ + rho_.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double TruncatedState::mean_photon_number(const ModeLabel& mode) const {
  const int p = basis_->position(mode);
  double n = 0.0;
  for (std::size_t s = 0; s < basis_->dim(); ++s)
    n += basis_->occupation(s, p) * rho_(s, s).real();
  return n;
}

std::vector<double> TruncatedState::number_distribution(
    const std::vector<ModeLabel>& modes) const {
  std::vector<int> pos;
  for (const auto& m : modes) pos.push_back(basis_->position(m));
  std::vector<double> dist(basis_->cutoff() + 1, 0.0);
  for (std::size_t s = 0; s < basis_->dim(); ++s) {
    int n = 0;
    for (int p : pos) n += basis_->occupation(s, p);
    dist[n] += rho_(s, s).real();
  }
  return dist;
}

double ThresholdDetector::no_click(int n) const {
  return (1.0 - dark_click_prob) * std::pow(1.0 - efficiency, n);
}

Eigen::Matrix2cd beam_splitter_matrix(double transmittance, double phase) {
  check_probability(transmittance, "transmittance");
  const double t = std::sqrt(transmittance);
  const double r = std::sqrt(1.0 - transmittance);
  const cplx i(0.0, 1.0);
  Eigen::Matrix2cd u;
  u(0, 0) = t;
  u(1, 0) = i * r * std::exp(i * phase);
  u(0, 1) = i * r * std::exp(-i * phase);
  u(1, 1) = t;
  return u;
}

TruncatedState apply_beam_splitter(const TruncatedState& state,
                                   const ModeLabel& mode_i,
                                   const ModeLabel& mode_j,
                                   double transmittance, double phase) {
  return apply_two_mode_unitary(state, mode_i, mode_j,
                                beam_splitter_matrix(transmittance, phase));
}

TruncatedState apply_two_mode_unitary(const TruncatedState& state,
                                      const ModeLabel& mode_i,
                                      const ModeLabel& mode_j,
                                      const Eigen::Matrix2cd& u) {
  const auto& basis = state.basis();
  const int pi = basis.position(mode_i);
  const int pj = basis.position(mode_j);
  if (pi == pj) throw Error(ErrorKind::kStructural, "beam splitter needs two distinct modes");
  auto w = two_mode_operator(basis, pi, pj, u);
  // W rho W^+ = (W (W rho)^+)^+ for Hermitian rho.
  CMatrix x = apply_left(w, state.rho());
  CMatrix y = apply_left(w, x.adjoint());
  return TruncatedState(state.basis_ptr(), y.adjoint(), state.norm_deficit());
}

PureState apply_two_mode_unitary(const PureState& state,
                                 const ModeLabel& mode_i,
                                 const ModeLabel& mode_j,
                                 const Eigen::Matrix2cd& u) {
  const auto& basis = *state.basis;
  const int pi = basis.position(mode_i);
  const int pj = basis.position(mode_j);
  if (pi == pj) throw Error(ErrorKind::kStructural, "beam splitter needs two distinct modes");
  // Source states are sparse; only occupied columns are expanded.
  CVector out = CVector::Zero(state.psi.size());
  std::vector<int> occ(basis.num_modes());
  for (std::size_t s = 0; s < basis.dim(); ++s) {
    if (state.psi(s) == 0.0) continue;
    for (int m = 0; m < basis.num_modes(); ++m) occ[m] = basis.occupation(s, m);
    const int p = occ[pi], q = occ[pj];
    const auto amp = two_mode_images(u, p, q);
    for (int k = 0; k <= p + q; ++k) {
      occ[pi] = k;
      occ[pj] = p + q - k;
      out(basis.index_of(occ)) += amp[k] * state.psi(s);
    }
  }
  return PureState{state.basis, out, state.norm_deficit};
}

TruncatedState apply_loss(const TruncatedState& state, const ModeLabel& mode,
                          double transmissivity) {
  check_probability(transmissivity, "transmissivity");
  const auto& basis = state.basis();
  const int p = basis.position(mode);
  const int cut = basis.cutoff();
  const std::size_t d = basis.dim();
  // lowered[s * (cut + 1) + l] = index of s with l photons removed from mode.
  std::vector<long> lowered(d * (cut + 1), -1);
  std::vector<int> occ(basis.num_modes());
  for (std::size_t s = 0; s < d; ++s) {
    for (int m = 0; m < basis.num_modes(); ++m) occ[m] = basis.occupation(s, m);
    const int n = occ[p];
    for (int l = 0; l <= n; ++l) {
      occ[p] = n - l;
      lowered[s * (cut + 1) + l] = basis.index_of(occ);
    }
  }
  auto kraus = [&](int n, int l) {
    return std::sqrt(binomial(n, l) * std::pow(transmissivity, n - l) *
                     std::pow(1.0 - transmissivity, l));
  };
  const CMatrix& rho = state.rho();
  CMatrix out = CMatrix::Zero(d, d);
  for (std::size_t c = 0; c < d; ++c) {
    const int nc = basis.occupation(c, p);
    for (std::size_t r = 0; r < d; ++r) {
      const cplx v = rho(r, c);
      if (v == cplx(0.0, 0.0)) continue;
      const int nr = basis.occupation(r, p);
      const int lmax = std::min(nr, nc);
      for (int l = 0; l <= lmax; ++l) {
        const long r2 = lowered[r * (cut + 1) + l];
        const long c2 = lowered[c * (cut + 1) + l];
        out(r2, c2) += kraus(nr, l) * kraus(nc, l) * v;
      }
    }
  }
  return TruncatedState(state.basis_ptr(), out, state.norm_deficit());
}

namespace {

struct Reduction {
  BasisPtr out_basis;
  std::vector<std::size_t> survivor_index;  // per input state
  std::vector<double> weight;               // per input state
  std::map<std::uint64_t, std::vector<std::size_t>> groups;
};

Reduction reduce(const FockBasis& basis, const std::vector<int>& measured,
                 const std::vector<const ThresholdDetector*>& detectors,
                 const std::vector<Click>& clicks) {
  std::vector<bool> is_measured(basis.num_modes(), false);
  for (int p : measured) is_measured[p] = true;
  std::vector<ModeLabel> survivors;
  std::vector<int> survivor_pos;
  for (int m = 0; m < basis.num_modes(); ++m) {
    if (!is_measured[m]) {
      survivors.push_back(basis.modes()[m]);
      survivor_pos.push_back(m);
    }
  }
  Reduction red;
  red.out_basis = make_basis(survivors, basis.cutoff());
  red.survivor_index.resize(basis.dim());
  red.weight.resize(basis.dim());
  std::vector<int> occ(survivors.size());
  for (std::size_t s = 0; s < basis.dim(); ++s) {
    for (std::size_t k = 0; k < survivor_pos.size(); ++k)
      occ[k] = basis.occupation(s, survivor_pos[k]);
    red.survivor_index[s] =
        static_cast<std::size_t>(red.out_basis->index_of(occ));
    std::uint64_t key = 0;
    double w = 1.0;
    for (std::size_t k = 0; k < measured.size(); ++k) {
      const int n = basis.occupation(s, measured[k]);
      key |= static_cast<std::uint64_t>(n) << (kBitsPerMode * k);
      if (detectors[k] != nullptr)
        w *= clicks[k] == Click::kClick ? detectors[k]->click(n)
                                        : detectors[k]->no_click(n);
    }
    red.weight[s] = w;
    red.groups[key].push_back(s);
  }
  return red;
}

Reduction reduce_for_pattern(const FockBasis& basis,
                             const DetectorMap& assignments,
                             const Pattern& pattern) {
  std::vector<int> measured;
  std::vector<const ThresholdDetector*> dets;
  std::vector<Click> clicks;
  for (const auto& [mode, click] : pattern) {
    measured.push_back(basis.position(mode));
    auto it = assignments.find(mode);
    if (it == assignments.end())
      throw Error(ErrorKind::kStructural, "no detector assigned to " + mode.name());
    check_probability(it->second.efficiency, "detector efficiency");
    check_probability(it->second.dark_click_prob, "dark click probability");
    dets.push_back(&it->second);
    clicks.push_back(click);
  }
  return reduce(basis, measured, dets, clicks);
}

Measurement finish(const Reduction& red, CMatrix out) {
  Measurement m;
  m.probability = out.trace().real();
  if (!(m.probability >= kUnnormalizableThreshold)) {
    m.unnormalizable = true;
    m.probability = std::max(m.probability, 0.0);
    return m;
  }
  out /= m.probability;
  m.state.emplace(red.out_basis, std::move(out), 0.0);
  return m;
}

}  // namespace

Measurement measure_threshold(const TruncatedState& state,
                              const DetectorMap& assignments,
                              const Pattern& pattern) {
  const auto red = reduce_for_pattern(state.basis(), assignments, pattern);
  const std::size_t d = red.out_basis->dim();
  CMatrix out = CMatrix::Zero(d, d);
  const CMatrix& rho = state.rho();
  for (const auto& [key, members] : red.groups) {
    const double w = red.weight[members.front()];
    if (w == 0.0) continue;
    for (std::size_t c : members)
      for (std::size_t r : members)
        out(red.survivor_index[r], red.survivor_index[c]) += w * rho(r, c);
  }
  return finish(red, std::move(out));
}

Measurement measure_threshold(const PureState& state,
                              const DetectorMap& assignments,
                              const Pattern& pattern) {
  const auto red = reduce_for_pattern(*state.basis, assignments, pattern);
  const std::size_t d = red.out_basis->dim();
  CMatrix out = CMatrix::Zero(d, d);
  CVector phi(d);
  for (const auto& [key, members] : red.groups) {
    const double w = red.weight[members.front()];
    if (w == 0.0) continue;
    phi.setZero();
    bool any = false;
    for (std::size_t s : members) {
      phi(red.survivor_index[s]) += state.psi(s);
      any = any || state.psi(s) != 0.0;
    }
    if (!any) continue;
    out.noalias() += w * phi * phi.adjoint();
  }
  return finish(red, std::move(out));
}

TruncatedState partial_trace(const TruncatedState& state,
                             const std::vector<ModeLabel>& traced) {
  std::vector<int> measured;
  for (const auto& m : traced) measured.push_back(state.basis().position(m));
  std::vector<const ThresholdDetector*> dets(measured.size(), nullptr);
  std::vector<Click> clicks(measured.size(), Click::kNoClick);
  const auto red = reduce(state.basis(), measured, dets, clicks);
  const std::size_t d = red.out_basis->dim();
  CMatrix out = CMatrix::Zero(d, d);
  const CMatrix& rho = state.rho();
  for (const auto& [key, members] : red.groups)
    for (std::size_t c : members)
      for (std::size_t r : members)
        out(red.survivor_index[r], red.survivor_index[c]) += rho(r, c);
  return TruncatedState(red.out_basis, std::move(out), state.norm_deficit());
}

double fidelity_to(const TruncatedState& state, const CVector& target) {
  if (target.size() != static_cast<Eigen::Index>(state.basis().dim()))
    throw Error(ErrorKind::kStructural, "target dimension does not match basis");
  return (target.adjoint() * state.rho() * target)(0, 0).real();
}

CVector basis_ket(const FockBasis& basis, const std::vector<int>& occ) {
  const long idx = basis.index_of(occ);
  if (idx < 0) throw Error(ErrorKind::kStructural, "occupation outside truncated basis");
  CVector v = CVector::Zero(basis.dim());
  v(idx) = 1.0;
  return v;
}

}  // namespace zalm::fock
