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

// Joint spectral amplitudes of a down-conversion process, DWDM filtering,
// Schmidt decomposition and the gated two-photon interference visibility.
//
// Frequencies are angular (rad/s). Grids are stored as offsets from their
// centre; the pump envelope is evaluated at the offset of the sum frequency
// from centre_s + centre_i.

#ifndef ZALM_SPECTRAL_HPP_
#define ZALM_SPECTRAL_HPP_

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace zalm::spectral {

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kTwoPi = 6.283185307179586476925;

struct FrequencyGrid {
  double center = 0.0;  // rad/s
  double span = 0.0;    // rad/s, first to last sample
  int n_points = 128;

  void validate() const;
  double spacing() const { return span / (n_points - 1); }
  double offset(int i) const { return -0.5 * span + i * spacing(); }
  // Trapezoid quadrature weights.
  Eigen::VectorXd weights() const;
};

enum class PumpKind { kCwGaussian, kModeLockedComb };

struct PumpEnvelope {
  PumpKind kind = PumpKind::kModeLockedComb;
  double linewidth = 0.0;           // sigma_P, rad/s
  double comb_spacing = 0.0;        // rad/s
  double envelope_bandwidth = 0.0;  // sigma_P,BW, rad/s
  int n_lines = 0;                  // lines run from -n_lines to n_lines

  // Amplitude at detuning d from the pump centre, normalized to 1 at d = 0.
  double operator()(double d) const;
  double raw(double d) const;

  // Comb with enough lines to cover +-3 envelope widths.
  static PumpEnvelope comb(double linewidth, double spacing,
                           double envelope_bandwidth);
  static PumpEnvelope cw(double linewidth);
};

// Temperature-dependent extended Sellmeier form,
// n^2 = a1 + b1 f + (a2 + b2 f)/(l^2 - (a3 + b3 f)^2) + (a4 + b4 f)/(l^2 - a5^2)
//       - a6 l^2, f = (T - 24.5)(T + 570.82), l in micrometres.
struct SellmeierCoefficients {
  std::array<double, 6> a{};
  std::array<double, 4> b{};
  double index(double wavelength_um, double temperature_c) const;
};

SellmeierCoefficients mgo_ln_extraordinary();
SellmeierCoefficients mgo_ln_ordinary();

struct SellmeierSet {
  std::string version;
  SellmeierCoefficients extraordinary;
  SellmeierCoefficients ordinary;
};
// Reads the versioned coefficient file (JSON). Throws kIo / kConfig.
SellmeierSet load_sellmeier(const std::string& path);

struct PhaseMatching {
  double length = 1.0;  // m
  SellmeierCoefficients signal = mgo_ln_extraordinary();
  SellmeierCoefficients idler = mgo_ln_ordinary();
  SellmeierCoefficients pump = mgo_ln_extraordinary();
  bool gaussian_approx = true;
  double temperature = 24.5;  // C
  // Quasi-phase matching is set so that the mismatch vanishes here.
  double center_signal = 0.0;
  double center_idler = 0.0;

  double wavenumber(const SellmeierCoefficients& c, double omega) const;
  // Residual mismatch at absolute angular frequencies.
  double delta_k(double omega_s, double omega_i) const;
  double operator()(double omega_s, double omega_i) const;
};

// gamma in sinc(x) ~ exp(-gamma x^2), matched at the half maximum.
double gaussian_sinc_gamma();

struct JointSpectralAmplitude {
  FrequencyGrid grid_s;
  FrequencyGrid grid_i;
  Eigen::MatrixXcd values;  // rows: signal, cols: idler
  bool normalized = false;
  // Norm kept by the last filter relative to its input.
  double pass_probability = 1.0;

  double norm_squared() const;
};

JointSpectralAmplitude build_jsa(const PumpEnvelope& pump,
                                 const PhaseMatching& pm,
                                 const FrequencyGrid& grid_s,
                                 const FrequencyGrid& grid_i);

// Normalizes an arbitrary sampled amplitude; throws kDomain if it is zero.
JointSpectralAmplitude normalize(JointSpectralAmplitude jsa);

enum class FilterProfile { kGaussian, kRectangular };
enum class FilterAxes { kSignal, kIdler, kBoth };

// Gaussian width is the intensity FWHM; rectangular width is the full pass
// band.
JointSpectralAmplitude apply_dwdm(const JointSpectralAmplitude& jsa,
                                  double channel_center, double channel_width,
                                  FilterProfile profile,
                                  FilterAxes axes = FilterAxes::kBoth);

struct SchmidtResult {
  Eigen::VectorXd eigenvalues;    // descending
  Eigen::MatrixXcd signal_modes;  // columns u_m, L2-normalized samples
  Eigen::MatrixXcd idler_modes;   // columns v_m
  double entropy = 0.0;           // bits

  double purity() const { return eigenvalues.squaredNorm(); }
};

SchmidtResult schmidt_decompose(const JointSpectralAmplitude& jsa);

// v = E/A from the quadruple integrals.
double visibility(const JointSpectralAmplitude& jsa);

// Swap signal and idler axes.
JointSpectralAmplitude transpose(const JointSpectralAmplitude& jsa);

void write_jsa(const JointSpectralAmplitude& jsa, const std::string& path);
JointSpectralAmplitude read_jsa(const std::string& path);

// Reference configuration (Hz-valued inputs, converted internally).
struct SpectralConfig {
  double center_wavelength = 1560e-9;  // m, signal and idler
  double crystal_length = 11.921557;   // m, effective; fitted to S = 0.446
  bool gaussian_approx = true;
  double temperature = 24.5;
  double pump_linewidth_hz = 12.5e9;
  double comb_spacing_hz = 1e9;
  double comb_bandwidth_hz = 12.5e9;
  double grid_span_hz = 12.5e9;
  int n_points = 256;
  double channel_width_hz = 12.5e9;
  FilterProfile channel_profile = FilterProfile::kGaussian;
  std::string sellmeier_file;  // empty: built-in coefficients
};

struct SpectralSummary {
  double entropy = 0.0;
  double visibility = 0.0;
  double purity = 0.0;
  double pass_probability = 0.0;
  double schmidt_number = 0.0;
};

JointSpectralAmplitude reference_jsa(const SpectralConfig& cfg,
                                     bool filtered = true);
SpectralSummary summarize(const JointSpectralAmplitude& jsa);

// Crystal length in [lo, hi] giving the target filtered entropy; bisection
// on the monotone S(L). Throws kNumerical if the target is not bracketed.
double fit_crystal_length(SpectralConfig cfg, double target_entropy,
                          double lo = 2.0, double hi = 30.0);

struct VisibilityOptimum {
  double crystal_length = 0.0;
  double visibility = 0.0;
  double entropy = 0.0;
};
// Crystal length maximizing the filtered visibility (Brent search).
VisibilityOptimum max_visibility(SpectralConfig cfg, double lo = 0.05,
                                 double hi = 5.0);

}  // namespace zalm::spectral

#endif  // ZALM_SPECTRAL_HPP_
