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

#include "zalm/converter.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include "zalm/error.hpp"
#include "zalm/parallel.hpp"

namespace zalm::converter {
namespace {

constexpr double kLn2 = 0.69314718055994530942;
constexpr double kC = 299792458.0;

void check_rate(double v, const char* what) {
  if (!(v >= 0.0 && std::isfinite(v)))
    throw Error(ErrorKind::kDomain, std::string(what) + " must be a finite non-negative rate");
}

double unwrap(double prev, double cur) {
  while (cur - prev > M_PI) cur -= 2 * M_PI;
  while (cur - prev < -M_PI) cur += 2 * M_PI;
  return cur;
}

}  // namespace

void CavityModeParams::validate() const {
  check_rate(kappa_a_w, "kappa_a_w");
  check_rate(kappa_b_w, "kappa_b_w");
  check_rate(kappa_a_l, "kappa_a_l");
  check_rate(kappa_b_l, "kappa_b_l");
  if (!std::isfinite(delta_a) || !std::isfinite(delta_b))
    throw Error(ErrorKind::kDomain, "detunings must be finite");
}

double kappa_from_q(double q, double wavelength) {
  if (!(q > 0.0 && wavelength > 0.0)) throw Error(ErrorKind::kDomain, "Q and wavelength must be positive");
  return 2 * M_PI * kC / wavelength / q;
}

double GaussianPulse::spectral_width() const { return 4 * kLn2 / fwhm; }

double GaussianPulse::operator()(double t) const {
  const double u = (t - arrival) / fwhm;
  return amplitude * std::sqrt(2.0 / fwhm) * std::pow(kLn2 / M_PI, 0.25) *
         std::exp(-2 * kLn2 * u * u);
}

double GaussianPulse::derivative(double t) const {
  return -4 * kLn2 * (t - arrival) / (fwhm * fwhm) * (*this)(t);
}

void GaussianPulse::validate() const {
  if (!(fwhm > 0.0 && std::isfinite(fwhm))) throw Error(ErrorKind::kDomain, "pulse FWHM must be positive");
  if (!std::isfinite(arrival) || !std::isfinite(offset) || !(amplitude >= 0.0))
    throw Error(ErrorKind::kDomain, "pulse arrival/offset must be finite and amplitude non-negative");
}

CavityModeParams reference_cavity(const GaussianPulse& pulse) {
  CavityModeParams c;
  c.kappa_a_w = 4 * pulse.spectral_width();
  c.kappa_b_w = 2 * M_PI * 100e6;
  return c;
}

std::pair<double, double> simulation_window(const GaussianPulse& pulse,
                                            const CavityModeParams& cavity) {
  const double tail = cavity.kappa_b_w > 0 ? 10.0 / cavity.kappa_b_w : 0.0;
  const double shift = std::abs(pulse.offset);
  return {pulse.arrival - 5 * pulse.fwhm - shift,
          pulse.arrival + std::max(5 * pulse.fwhm, tail) + shift};
}

// Working with u = t - center and unit amplitude: the constant factors
// A^2 exp(kappa_b center) cancel in Lambda.
double AbsorptionFunctions::f(double t) const {
  const double u = t - center;
  return (k / 2 + b * u) * std::exp(-b * u * u + kappa_b * u);
}

double AbsorptionFunctions::big_f(double t) const {
  if (t <= t0) return 0.0;
  const double scale = 1.0 / std::sqrt(b);
  if (t - t0 < 0.5 * scale) {
    // Closed form cancels to second order near the root.
    auto g = [this](double s) { return f(s); };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, t0, t, 0, 1e-15);
  }
  const double c = kappa_b / (2 * b);
  const double v = (t - center) - c;
  const double v0 = (t0 - center) - c;
  const double sb = std::sqrt(b);
  double derf;
  if (v < 0) {
    derf = std::erfc(-sb * v) - std::erfc(-sb * v0);
  } else {
    derf = std::erf(sb * v) - std::erf(sb * v0);
  }
  const double pref = std::exp(kappa_b * kappa_b / (4 * b));
  return pref * ((k + kappa_b) / 2 * std::sqrt(M_PI / b) / 2 * derf +
                 0.5 * (std::exp(-b * v0 * v0) - std::exp(-b * v * v)));
}

AbsorptionFunctions absorption_functions(const GaussianPulse& template_pulse,
                                         const CavityModeParams& cavity) {
  AbsorptionFunctions a;
  a.center = template_pulse.arrival - template_pulse.offset;
  a.b = 4 * kLn2 / (template_pulse.fwhm * template_pulse.fwhm);
  a.k = cavity.kappa_a_w - cavity.kappa_a_l;
  a.kappa_b = cavity.kappa_b();
  a.amp2 = template_pulse.amplitude * template_pulse.amplitude;
  a.t0 = a.center - a.k / (2 * a.b);
  return a;
}

ControlPulse ControlPulse::constant(double magnitude, double phase) {
  ControlPulse c;
  c.const_mag_ = magnitude;
  c.const_phase_ = phase;
  return c;
}

ControlPulse ControlPulse::zero() { return constant(0.0, 0.0); }

double ControlPulse::magnitude(double t) const {
  if (mag_fn_) return mag_fn_(t);
  return const_mag_;
}

double ControlPulse::phase(double t) const {
  if (phase_fn_) return phase_fn_(t);
  return const_phase_;
}

ControlPulse synthesize_control(const GaussianPulse& pulse,
                                const CavityModeParams& cavity,
                                const SynthesisOptions& opts) {
  pulse.validate();
  cavity.validate();
  if (!(cavity.kappa_a_w > 0.0))
    throw Error(ErrorKind::kPrecondition, "mode a needs a waveguide coupling to absorb the input");
  if (opts.n_samples < 16) throw Error(ErrorKind::kPrecondition, "need at least 16 control samples");
  ControlPulse out;
  const auto [w0, w1] = simulation_window(pulse, cavity);
  // Lambda is negligible beyond ~8 tau_G after the template centre.
  const double s1 = std::min(w1, pulse.arrival - pulse.offset + 8 * pulse.fwhm);
  out.times_.resize(opts.n_samples);
  for (int i = 0; i < opts.n_samples; ++i)
    out.times_[i] = w0 + (s1 - w0) * i / (opts.n_samples - 1);

  if (pulse.amplitude == 0.0) {
    out.mags_.assign(opts.n_samples, 0.0);
    out.phases_.assign(opts.n_samples, 0.0);
    out.mag_fn_ = [](double) { return 0.0; };
    out.phase_fn_ = [](double) { return 0.0; };
    out.t_start_ = w0;
    return out;
  }

  const auto af = std::make_shared<AbsorptionFunctions>(absorption_functions(pulse, cavity));
  const double delta_b = cavity.delta_b;
  out.t_start_ = af->t0;

  // f_i must stay non-negative once absorption starts.
  double bad_lo = NAN, bad_hi = NAN;
  for (double t : out.times_) {
    if (t <= af->t0) continue;
    if (af->f(t) < -1e-12 * std::abs(af->f(af->t0 + 1.0 / std::sqrt(af->b)))) {
      if (std::isnan(bad_lo)) bad_lo = t;
      bad_hi = t;
    }
  }
  if (!std::isnan(bad_lo)) {
    std::ostringstream os;
    os << "f_i < 0 on [" << bad_lo << ", " << bad_hi << "] s";
    throw Error(ErrorKind::kSynthesis, os.str());
  }

  if (cavity.delta_a == 0.0) {
    const double limit = std::sqrt(af->b);
    out.mag_fn_ = [af, limit](double t) {
      if (t < af->t0) return 0.0;
      const double u = t - af->center;
      const double ff = af->big_f(t);
      if (!(ff > 0.0)) return t == af->t0 ? limit : 0.0;
      return std::abs(af->k / 2 + af->b * u) *
             std::exp(-0.5 * af->b * u * u + 0.5 * af->kappa_b * u) / std::sqrt(2 * ff);
    };
    out.phase_fn_ = [delta_b](double t) { return -delta_b * t; };
    for (double t : out.times_) {
      out.mags_.push_back(out.mag_fn_(t));
      out.phases_.push_back(out.phase_fn_(t));
    }
    return out;
  }

  // General detuned solution on the sample grid.
  const double delta_a = cavity.delta_a;
  const double f_end = af->big_f(w1 + 10 / std::sqrt(af->b));
  const double ceiling = opts.ceiling * pulse.spectral_width();
  std::size_t first = 0;
  while (first < out.times_.size() && af->big_f(out.times_[first]) < opts.start_fraction * f_end) ++first;
  if (first >= out.times_.size()) throw Error(ErrorKind::kSynthesis, "absorption never starts inside the window");
  out.t_start_ = out.times_[first];
  const std::size_t n = out.times_.size();
  out.mags_.assign(n, 0.0);
  out.phases_.assign(n, 0.0);
  double theta = 0.0, prev_ratio = 0.0, prev_phase = 0.0;
  for (std::size_t i = first; i < n; ++i) {
    const double t = out.times_[i];
    const double u = t - af->center;
    const double env = std::exp(-af->b * u * u + af->kappa_b * u);
    const double ff = af->big_f(t);
    const double fi = (af->k / 2 + af->b * u) * env;
    const double gi = -delta_a * env;
    const double ratio = gi / ff;
    if (i > first) theta += -0.25 * (ratio + prev_ratio) * (t - out.times_[i - 1]);
    prev_ratio = ratio;
    const double x = fi * std::cos(theta) + gi * std::sin(theta);
    const double y = fi * std::sin(theta) - gi * std::cos(theta);
    double mag2 = (delta_a * delta_a + (af->k / 2 + af->b * u) * (af->k / 2 + af->b * u)) * env / (2 * ff);
    out.mags_[i] = std::min(std::sqrt(std::max(mag2, 0.0)), ceiling);
    double ph = -delta_b * t + std::atan2(y, x);
    if (i > first) ph = unwrap(prev_phase, ph);
    out.phases_[i] = prev_phase = ph;
  }
  for (std::size_t i = 0; i < first; ++i) out.phases_[i] = out.phases_[first];
  const double h = out.times_[1] - out.times_[0];
  auto mag_spline = std::make_shared<boost::math::interpolators::cardinal_cubic_b_spline<double>>(
      out.mags_.begin(), out.mags_.end(), out.times_.front(), h);
  auto ph_spline = std::make_shared<boost::math::interpolators::cardinal_cubic_b_spline<double>>(
      out.phases_.begin(), out.phases_.end(), out.times_.front(), h);
  const double ts = out.t_start_, lo = out.times_.front(), hi = out.times_.back();
  out.mag_fn_ = [mag_spline, ts, lo, hi](double t) {
    if (t < ts || t < lo || t > hi) return 0.0;
    return std::max(0.0, (*mag_spline)(t));
  };
  out.phase_fn_ = [ph_spline, lo, hi](double t) { return (*ph_spline)(std::clamp(t, lo, hi)); };
  return out;
}

double CavityTrace::ledger_error() const {
  return std::abs(input_norm - (p_a_out + p_b_out + loss_a + loss_b + residual));
}

namespace {

using State = std::array<double, 9>;

struct Rhs {
  const CavityModeParams& cav;
  const ControlPulse& control;
  const InputFn& input;
  double unit;  // time unit in seconds
  long* calls;

  void operator()(const State& x, State& dx, double s) const {
    ++*calls;
    const double t = s * unit;
    const cplx pa(x[0], x[1]), pb(x[2], x[3]);
    const double xi = input(t) * std::sqrt(unit);
    const double lam = control.magnitude(t) * unit;
    const double phi = control.phase(t);
    const cplx e = std::polar(1.0, phi);
    const cplx I(0.0, 1.0);
    const double ka = cav.kappa_a() * unit, kb = cav.kappa_b() * unit;
    const double kaw = cav.kappa_a_w * unit, kbw = cav.kappa_b_w * unit;
    const cplx dpa = -(I * cav.delta_a * unit + ka / 2) * pa - I * lam * std::conj(e) * pb +
                     std::sqrt(kaw) * xi;
    const cplx dpb = -(I * cav.delta_b * unit + kb / 2) * pb - I * lam * e * pa;
    const cplx xao = xi - std::sqrt(kaw) * pa;
    const cplx xbo = -std::sqrt(kbw) * pb;
    dx[0] = dpa.real();
    dx[1] = dpa.imag();
    dx[2] = dpb.real();
    dx[3] = dpb.imag();
    dx[4] = std::norm(xao);
    dx[5] = std::norm(xbo);
    dx[6] = cav.kappa_a_l * unit * std::norm(pa);
    dx[7] = cav.kappa_b_l * unit * std::norm(pb);
    dx[8] = xi * xi;
  }
};

}  // namespace

CavityTrace integrate_cavity(const CavityModeParams& cavity,
                             const ControlPulse& control, const InputFn& input,
                             double t_begin, double t_end, cplx psi_a0,
                             cplx psi_b0, const IntegrationOptions& opts) {
  cavity.validate();
  if (!(t_end > t_begin)) throw Error(ErrorKind::kPrecondition, "integration window is empty");
  if (opts.n_output < 2) throw Error(ErrorKind::kPrecondition, "need at least two output samples");
  namespace ode = boost::numeric::odeint;
  // Scale time so the fastest rate is O(1).
  const double fastest = std::max({cavity.kappa_a(), cavity.kappa_b(), std::abs(cavity.delta_a),
                                   std::abs(cavity.delta_b), 1.0 / (t_end - t_begin)});
  const double unit = 1.0 / fastest;
  long calls = 0;
  Rhs rhs{cavity, control, input, unit, &calls};
  State x{psi_a0.real(), psi_a0.imag(), psi_b0.real(), psi_b0.imag(), 0, 0, 0, 0, 0};

  CavityTrace tr;
  std::vector<double> grid(opts.n_output);
  for (int i = 0; i < opts.n_output; ++i)
    grid[i] = (t_begin + (t_end - t_begin) * i / (opts.n_output - 1)) / unit;
  auto obs = [&](const State& s, double tt) {
    const double t = tt * unit;
    const cplx pa(s[0], s[1]), pb(s[2], s[3]);
    tr.t.push_back(t);
    tr.psi_a.push_back(pa);
    tr.psi_b.push_back(pb);
    tr.xi_a_out.push_back(input(t) - std::sqrt(cavity.kappa_a_w) * pa);
    tr.xi_b_out.push_back(-std::sqrt(cavity.kappa_b_w) * pb);
  };
  auto stepper = ode::make_dense_output(opts.abs_tol, opts.rel_tol, ode::runge_kutta_dopri5<State>());
  // Cap the step so the drive is not stepped over.
  const double dt0 = 1e-3;
  try {
    tr.steps = static_cast<long>(ode::integrate_times(stepper, std::ref(rhs), x, grid.begin(), grid.end(),
                                                      dt0, obs, ode::max_step_checker(opts.max_steps)));
  } catch (const std::exception& e) {
    std::ostringstream os;
    os << "cavity integration failed after " << calls << " evaluations: " << e.what();
    throw Error(ErrorKind::kNumerical, os.str());
  }
  const cplx pa(x[0], x[1]), pb(x[2], x[3]);
  tr.p_a_out = x[4];
  tr.p_b_out = x[5];
  tr.loss_a = x[6];
  tr.loss_b = x[7];
  tr.input_norm = x[8] + std::norm(psi_a0) + std::norm(psi_b0);
  tr.residual = std::norm(pa) + std::norm(pb);
  return tr;
}

CavityTrace integrate_cavity(const GaussianPulse& pulse,
                             const CavityModeParams& cavity,
                             const ControlPulse& control,
                             const IntegrationOptions& opts) {
  pulse.validate();
  const auto [w0, w1] = simulation_window(pulse, cavity);
  GaussianPulse in = pulse;
  return integrate_cavity(cavity, control, [in](double t) { return in(t); }, w0, w1, 0.0, 0.0, opts);
}

double conversion_efficiency(const GaussianPulse& pulse,
                             const CavityModeParams& cavity,
                             const ControlPulse& control,
                             const IntegrationOptions& opts) {
  return integrate_cavity(pulse, cavity, control, opts).p_b_out;
}

double absorption_residual(const GaussianPulse& pulse,
                           const CavityModeParams& cavity,
                           const ControlPulse& control,
                           const IntegrationOptions& opts) {
  pulse.validate();
  if (!(cavity.kappa_a_w > 0.0)) throw Error(ErrorKind::kPrecondition, "mode a is uncoupled");
  const auto [w0, w1] = simulation_window(pulse, cavity);
  const double t0 = std::max(control.start_time(), w0);
  GaussianPulse in = pulse;
  const cplx pa0 = in(t0) / std::sqrt(cavity.kappa_a_w);
  auto tr = integrate_cavity(cavity, control, [in](double t) { return in(t); }, t0, w1, pa0, 0.0, opts);
  double peak = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    peak = std::max(peak, std::abs(in(tr.t[i])));
    worst = std::max(worst, std::abs(tr.xi_a_out[i]));
  }
  return peak > 0.0 ? worst / peak : 0.0;
}

std::vector<SweepPoint> sweep_conversion(const GaussianPulse& pulse,
                                         const CavityModeParams& cavity,
                                         SweepAxis axis,
                                         const std::vector<double>& values,
                                         const IntegrationOptions& opts,
                                         unsigned n_threads) {
  for (double v : values)
    if (!std::isfinite(v) || (axis == SweepAxis::kIntrinsicLoss && v < 0.0))
      throw Error(ErrorKind::kDomain, "invalid sweep value");
  std::vector<SweepPoint> out(values.size());
  parallel_for(values.size(), [&](std::size_t i) {
    GaussianPulse p = pulse;
    CavityModeParams c = cavity;
    if (axis == SweepAxis::kTimingOffset) {
      p.offset = values[i];
    } else {
      c.kappa_a_l = c.kappa_b_l = values[i];
    }
    const auto ctl = synthesize_control(p, c);
    const auto tr = integrate_cavity(p, c, ctl, opts);
    out[i] = {values[i], tr.p_b_out, tr.ledger_error()};
  }, n_threads);
  return out;
}

void write_sweep_csv(const std::string& path, SweepAxis axis,
                     const std::vector<SweepPoint>& points) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::kIo, "cannot write " + path);
  f << (axis == SweepAxis::kTimingOffset ? "timing_offset_s" : "kappa_l_rad_per_s") << ",efficiency\n";
  f.precision(12);
  for (const auto& p : points) f << p.axis_value << "," << p.efficiency << "\n";
}

}  // namespace zalm::converter
