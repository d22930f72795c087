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

// Dual-SPDC ZALM source: state construction, spectrally demultiplexed Bell
// state analysis, parity heralding, generation probabilities and the
// spin-spin fidelity pipeline for the heralded and free-running sources.
//
// Mode map (paper labels -> ModeLabel):
//   a1 A.s.H   a2 A.s.V   a3 A.i.H   a4 A.i.V
//   b4 B.s.H   b3 B.s.V   b2 B.i.H   b1 B.i.V
// Down-conversion processes pair each signal with the idler of the same
// source and polarization. Detectors: D1/D2 on (a4, b1), D3/D4 on (a3, b2).

#ifndef ZALM_SOURCE_HPP_
#define ZALM_SOURCE_HPP_

#include <array>
#include <optional>
#include <vector>

#include "zalm/fock.hpp"
#include "zalm/spin.hpp"

namespace zalm::source {

struct SpdcParams {
  double mean_photon_number = 2.94e-2;  // N_s per spectral mode
  double pm_bandwidth = 10e12;          // Hz
  double channel_width = 12.5e9;        // Hz
  double rep_rate = 30e9;               // Hz

  void validate() const;
  int n_modes() const;
};

using ClickTuple = std::array<int, 4>;  // D1..D4, 1 = click

struct Parity {
  int m1 = 0;
  int m2 = 0;
  bool operator==(const Parity& o) const { return m1 == o.m1 && m2 == o.m2; }
};

// Accepted patterns and their parity bits; nullopt for non-heralding
// patterns.
std::optional<Parity> parity_bits(const ClickTuple& pattern);
std::vector<ClickTuple> accepted_patterns();
inline const ClickTuple kReferencePattern{1, 0, 1, 0};

// Mode occupied by detector d (1..4) after the analyzer.
fock::ModeLabel detector_mode(int d);

// Per-process TMSV photon-number amplitude sqrt(N^n / (1+N)^{n+1}).
double tmsv_amplitude(double n_mean, int n);

// Eight-mode source state truncated at `cutoff` total photons. The state is
// left unnormalized; the discarded weight is the norm deficit.
fock::PureState build_source_pure(const SpdcParams& params, int cutoff = 4);
fock::TruncatedState build_source_state(const SpdcParams& params,
                                        int cutoff = 4);

// Idler beam splitters of the analyzer.
fock::PureState apply_bsa(const fock::PureState& state);

using DetectorBank = std::array<fock::ThresholdDetector, 4>;

struct HeraldRecord {
  ClickTuple pattern{};
  bool accepted = false;
  Parity parity;
  int channel_index = 0;
  double herald_probability = 0.0;
  // Normalized state on A.s.H, A.s.V, B.s.H, B.s.V.
  std::optional<fock::TruncatedState> heralded_state;
};

// Measures the analyzer output (apply_bsa already applied) and scales the
// coherence between |1001> and |0110> by the visibility.
HeraldRecord herald(const fock::PureState& analyzed, const DetectorBank& detectors,
                    const ClickTuple& pattern, double visibility = 1.0,
                    int channel_index = 0);
HeraldRecord herald(const fock::TruncatedState& analyzed,
                    const DetectorBank& detectors, const ClickTuple& pattern,
                    double visibility = 1.0, int channel_index = 0);

// Bell-state label of the ideal heralded state for a parity pair.
spin::BellState heralded_bell_state(const Parity& p);

// Weight of the one-photon-per-station dual-rail sector.
double bell_sector_weight(const fock::TruncatedState& state);
// Probability that both stations receive at least one photon.
double both_receive_probability(const fock::TruncatedState& state);

DetectorBank uniform_detectors(double efficiency, double dark_prob = 0.0);

// Herald probability times Bell-sector weight, summed over the patterns.
double p_gen(const SpdcParams& params, const DetectorBank& detectors,
             const std::vector<ClickTuple>& patterns, int cutoff = 4);

double p_zalm(double p_gen, int n_modes);
double emission_rate(const SpdcParams& params, double p_zalm);

struct Pileup {
  double mean_occupancy = 0.0;
  double p_multi = 0.0;
};
Pileup detector_pileup(const SpdcParams& params, double reset_time,
                       double pair_rate);

// Unheralded narrowband source: TMSV on (A.s.H, B.s.V) and (A.s.V, B.s.H).
fock::TruncatedState free_running_state(double n_mean, int cutoff = 4);

struct FidelityConfig {
  double visibility = 0.996;
  double cooperativity = 100.0;
  double kwg_over_kappa = 1.0;
  double dark_rate = 100.0;     // Hz, spin-station detectors
  double gate_window = 5e-9;    // s
  double detector_efficiency = 1.0;  // qTX
  double detector_dark_prob = 0.0;   // qTX, per gate
  spin::DarkModel dark_model = spin::DarkModel::kPaper;
  double station_efficiency = 1.0;
  double non_bell_fidelity = 0.25;
  int cutoff = 4;

  double p_dark() const { return dark_rate * gate_window; }
};

spin::TeleportResult zalm_fidelity(double n_mean, const FidelityConfig& cfg,
                                   const ClickTuple& pattern = kReferencePattern);
spin::TeleportResult free_running_fidelity(double n_mean,
                                           const FidelityConfig& cfg);

enum class SourceKind { kZalm, kFreeRunning };

struct CurvePoint {
  double n_mean = 0.0;
  double fidelity = 0.0;
};
std::vector<CurvePoint> fidelity_vs_ns(SourceKind kind,
                                       const std::vector<double>& ns,
                                       const FidelityConfig& cfg);

struct FreeRunningResult {
  bool found = false;
  double ns_required = 0.0;
  double p_spdc = 0.0;
  double rate = 0.0;  // Hz
  double filter_bandwidth = 0.0;
  double max_fidelity = 0.0;
  double ns_at_max = 0.0;
  std::vector<CurvePoint> curve;
};

// Sweeps N_s on a log grid, locates the interior maximum and the crossing of
// the target on the high-N_s side.
FreeRunningResult free_running_spdc(const SpdcParams& params,
                                    double filter_bandwidth,
                                    const FidelityConfig& cfg,
                                    double target_fidelity = 0.998,
                                    double ns_lo = 1e-8, double ns_hi = 0.1,
                                    int n_points = 61);

}  // namespace zalm::source

#endif  // ZALM_SOURCE_HPP_
