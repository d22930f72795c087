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

// Cavity-based frequency and bandwidth conversion driven by a shaped
// control field. All public quantities are SI: seconds, rad/s, and
// wave-packet amplitudes in s^-1/2.

#ifndef ZALM_CONVERTER_HPP_
#define ZALM_CONVERTER_HPP_

#include <complex>
#include <functional>
#include <vector>

namespace zalm::converter {

using cplx = std::complex<double>;

struct CavityModeParams {
  double kappa_a_w = 0.0;  // rad/s
  double kappa_b_w = 0.0;
  double kappa_a_l = 0.0;
  double kappa_b_l = 0.0;
  double delta_a = 0.0;
  double delta_b = 0.0;

  double kappa_a() const { return kappa_a_w + kappa_a_l; }
  double kappa_b() const { return kappa_b_w + kappa_b_l; }
  void validate() const;
};

// Loss rate of a resonator with quality factor q at the given vacuum
// wavelength.
double kappa_from_q(double q, double wavelength);

struct GaussianPulse {
  double fwhm = 80e-12;   // tau_G, intensity FWHM
  double arrival = 0.0;   // T_in
  double offset = 0.0;    // control computed for xi(t + offset)
  double amplitude = 1.0; // scales xi; 0 gives an empty input

  double spectral_width() const;  // Omega_G = 4 ln2 / tau_G
  double operator()(double t) const;
  double derivative(double t) const;
  void validate() const;
};

// Appendix-style reference: tau_G = 80 ps, kappa_a_w = 4 Omega_G,
// kappa_b_w = 2 pi x 100 MHz, lossless, resonant.
CavityModeParams reference_cavity(const GaussianPulse& pulse);

struct SynthesisOptions {
  int n_samples = 4001;
  // Synthesis begins where F_i exceeds this fraction of its final value
  // (only used on the sampled path).
  double start_fraction = 1e-8;
  // Ceiling on |Lambda| in units of Omega_G (sampled path).
  double ceiling = 1e3;
};

class ControlPulse {
 public:
  ControlPulse() = default;

  static ControlPulse constant(double magnitude, double phase);
  static ControlPulse zero();

  // |Lambda(t)| and phi(t).
  double magnitude(double t) const;
  double phase(double t) const;

  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& magnitudes() const { return mags_; }
  const std::vector<double>& phases() const { return phases_; }
  double start_time() const { return t_start_; }
  bool analytic() const { return static_cast<bool>(mag_fn_); }

 private:
  friend ControlPulse synthesize_control(const GaussianPulse&,
                                         const CavityModeParams&,
                                         const SynthesisOptions&);
  std::vector<double> times_, mags_, phases_;
  double t_start_ = 0.0;
  std::function<double(double)> mag_fn_, phase_fn_;
  double const_mag_ = 0.0, const_phase_ = 0.0;
};

// Window [T_in - 5 tau_G, T_in + max(5 tau_G, 10 / kappa_b_w)].
std::pair<double, double> simulation_window(const GaussianPulse& pulse,
                                            const CavityModeParams& cavity);

// Closed-form f_i, its antiderivative from the root t0, and t0 itself
// (delta_a-independent; chirp-free Gaussian).
struct AbsorptionFunctions {
  double t0 = 0.0;
  double f(double t) const;
  double big_f(double t) const;

  double amp2 = 0.0, center = 0.0, b = 0.0, k = 0.0, kappa_b = 0.0;
};
AbsorptionFunctions absorption_functions(const GaussianPulse& template_pulse,
                                         const CavityModeParams& cavity);

ControlPulse synthesize_control(const GaussianPulse& pulse,
                                const CavityModeParams& cavity,
                                const SynthesisOptions& opts = {});

struct IntegrationOptions {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  int n_output = 2001;
  long max_steps = 5'000'000;
};

struct CavityTrace {
  std::vector<double> t;
  std::vector<cplx> xi_a_out, xi_b_out, psi_a, psi_b;
  double input_norm = 0.0;     // integral of |xi_in|^2 over the window
  double p_a_out = 0.0;
  double p_b_out = 0.0;
  double loss_a = 0.0;
  double loss_b = 0.0;
  double residual = 0.0;       // |psi_a|^2 + |psi_b|^2 at the end
  long steps = 0;

  double ledger_error() const;
};

using InputFn = std::function<double(double)>;

// Low-level integrator over [t_begin, t_end] from the given initial
// amplitudes.
CavityTrace integrate_cavity(const CavityModeParams& cavity,
                             const ControlPulse& control, const InputFn& input,
                             double t_begin, double t_end, cplx psi_a0,
                             cplx psi_b0, const IntegrationOptions& opts = {});

// Physical run: empty cavity at the window start.
CavityTrace integrate_cavity(const GaussianPulse& pulse,
                             const CavityModeParams& cavity,
                             const ControlPulse& control,
                             const IntegrationOptions& opts = {});

double conversion_efficiency(const GaussianPulse& pulse,
                             const CavityModeParams& cavity,
                             const ControlPulse& control,
                             const IntegrationOptions& opts = {});

// Round trip: starts at the synthesis root with the absorbing initial
// condition and returns max |xi_a_out| / max |xi_in| thereafter.
double absorption_residual(const GaussianPulse& pulse,
                           const CavityModeParams& cavity,
                           const ControlPulse& control,
                           const IntegrationOptions& opts = {});

enum class SweepAxis { kTimingOffset, kIntrinsicLoss };

struct SweepPoint {
  double axis_value = 0.0;
  double efficiency = 0.0;
  double ledger_error = 0.0;
};

// Timing offsets in seconds; intrinsic loss as kappa_l in rad/s applied to
// both modes. The control is re-synthesized per point. Points run on
// n_threads workers (0 = hardware concurrency).
std::vector<SweepPoint> sweep_conversion(const GaussianPulse& pulse,
                                         const CavityModeParams& cavity,
                                         SweepAxis axis,
                                         const std::vector<double>& values,
                                         const IntegrationOptions& opts = {},
                                         unsigned n_threads = 0);

void write_sweep_csv(const std::string& path, SweepAxis axis,
                     const std::vector<SweepPoint>& points);

}  // namespace zalm::converter

#endif  // ZALM_CONVERTER_HPP_
