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

// Truncated multimode Fock-space states and the bosonic operations used by
// the source, heralding and teleportation models.
//
// Canonical mode ordering: ordinal = 4*source + 2*branch + pol, so the eight
// source modes run A/signal/H, A/signal/V, A/idler/H, A/idler/V, then the
// same four for B. Basis states are sorted by total photon number and then
// lexicographically (descending occupation of the first mode first).
//
// Beam-splitter convention: a_i^+ -> t a_i^+ + i r e^{i phi} a_j^+,
// a_j^+ -> i r e^{-i phi} a_i^+ + t a_j^+ (reflection picks up i).

#ifndef ZALM_FOCK_HPP_
#define ZALM_FOCK_HPP_

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace zalm::fock {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

enum class Source : std::uint8_t { kA = 0, kB = 1 };
enum class Branch : std::uint8_t { kSignal = 0, kIdler = 1 };
enum class Pol : std::uint8_t { kH = 0, kV = 1 };

struct ModeLabel {
  Source source = Source::kA;
  Branch branch = Branch::kSignal;
  Pol pol = Pol::kH;

  int ordinal() const {
    return 4 * static_cast<int>(source) + 2 * static_cast<int>(branch) +
           static_cast<int>(pol);
  }
  std::string name() const;
  static ModeLabel from_ordinal(int ordinal);

  friend bool operator==(const ModeLabel& a, const ModeLabel& b) {
    return a.ordinal() == b.ordinal();
  }
  friend bool operator<(const ModeLabel& a, const ModeLabel& b) {
    return a.ordinal() < b.ordinal();
  }
};

// All eight labels in canonical order.
std::vector<ModeLabel> all_mode_labels();

class FockBasis {
 public:
  FockBasis(std::vector<ModeLabel> modes, int cutoff);

  std::size_t dim() const { return n_states_; }
  int num_modes() const { return static_cast<int>(modes_.size()); }
  int cutoff() const { return cutoff_; }
  const std::vector<ModeLabel>& modes() const { return modes_; }

  // Position of a mode within this basis; throws a structural error.
  int position(const ModeLabel& mode) const;
  bool contains(const ModeLabel& mode) const;

  int occupation(std::size_t state, int pos) const {
    return occ_[state * modes_.size() + pos];
  }
  int total(std::size_t state) const { return totals_[state]; }

  // Index of an occupation vector, or -1 when it lies above the cutoff.
  long index_of(const std::vector<int>& occ) const;

  std::string ket(std::size_t state) const;

 private:
  std::uint64_t pack(const int* occ) const;

  std::vector<ModeLabel> modes_;
  int cutoff_;
  std::size_t n_states_ = 0;
  std::vector<std::uint8_t> occ_;
  std::vector<int> totals_;
  std::map<std::uint64_t, std::size_t> lookup_;
};

using BasisPtr = std::shared_ptr<const FockBasis>;

BasisPtr make_basis(std::vector<ModeLabel> modes, int cutoff);

class TruncatedState {
 public:
  TruncatedState(BasisPtr basis, CMatrix rho, double norm_deficit);

  static TruncatedState vacuum(std::vector<ModeLabel> modes, int cutoff);
  static TruncatedState from_pure(BasisPtr basis, const CVector& psi,
                                  double norm_deficit);

  const FockBasis& basis() const { return *basis_; }
  const BasisPtr& basis_ptr() const { return basis_; }
  const CMatrix& rho() const { return rho_; }
  double norm_deficit() const { return norm_deficit_; }
  double trace() const { return rho_.trace().real(); }

  // Max |rho - rho^+| element.
  double hermiticity_error() const;
  double min_eigenvalue() const;
  double mean_photon_number(const ModeLabel& mode) const;
  // Probability of each total photon number in the listed modes.
  std::vector<double> number_distribution(
      const std::vector<ModeLabel>& modes) const;

 private:
  BasisPtr basis_;
  CMatrix rho_;
  double norm_deficit_;
};

// Pure state on a truncated basis (the source state before any loss).
struct PureState {
  BasisPtr basis;
  CVector psi;
  double norm_deficit = 0.0;
};

struct ThresholdDetector {
  double efficiency = 1.0;
  double dark_click_prob = 0.0;

  // <n| no-click effect |n>.
  double no_click(int n) const;
  double click(int n) const { return 1.0 - no_click(n); }
};

enum class Click : std::uint8_t { kNoClick = 0, kClick = 1 };

using DetectorMap = std::map<ModeLabel, ThresholdDetector>;
using Pattern = std::map<ModeLabel, Click>;

struct Measurement {
  double probability = 0.0;
  // Normalized post-measurement state on the unmeasured modes; empty when
  // the pattern is unnormalizable.
  std::optional<TruncatedState> state;
  bool unnormalizable = false;
};

inline constexpr double kUnnormalizableThreshold = 1e-15;

Eigen::Matrix2cd beam_splitter_matrix(double transmittance, double phase);

TruncatedState apply_beam_splitter(const TruncatedState& state,
                                   const ModeLabel& mode_i,
                                   const ModeLabel& mode_j,
                                   double transmittance, double phase);

// General two-mode passive transform; column c of u gives the image of the
// creation operator of input c (0 = mode_i, 1 = mode_j).
TruncatedState apply_two_mode_unitary(const TruncatedState& state,
                                      const ModeLabel& mode_i,
                                      const ModeLabel& mode_j,
                                      const Eigen::Matrix2cd& u);
PureState apply_two_mode_unitary(const PureState& state,
                                 const ModeLabel& mode_i,
                                 const ModeLabel& mode_j,
                                 const Eigen::Matrix2cd& u);

TruncatedState apply_loss(const TruncatedState& state, const ModeLabel& mode,
                          double transmissivity);

Measurement measure_threshold(const TruncatedState& state,
                              const DetectorMap& assignments,
                              const Pattern& pattern);
Measurement measure_threshold(const PureState& state,
                              const DetectorMap& assignments,
                              const Pattern& pattern);

TruncatedState partial_trace(const TruncatedState& state,
                             const std::vector<ModeLabel>& traced);

double fidelity_to(const TruncatedState& state, const CVector& target);

// Ket for an explicit occupation vector on a basis.
CVector basis_ket(const FockBasis& basis, const std::vector<int>& occ);

}  // namespace zalm::fock

#endif  // ZALM_FOCK_HPP_
