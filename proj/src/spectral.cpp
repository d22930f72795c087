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

#include "zalm/spectral.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include "json.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "zalm/error.hpp"

namespace zalm::spectral {
namespace {

using json = nlohmann::json;

double filter_amplitude(double d, double width, FilterProfile profile) {
  if (profile == FilterProfile::kRectangular)
    return std::abs(d) <= 0.5 * width * (1.0 + 1e-12) ? 1.0 : 0.0;
  return std::exp(-2.0 * std::log(2.0) * (d / width) * (d / width));
}

SellmeierCoefficients coefficients_from_json(const json& j) {
  SellmeierCoefficients c;
  const auto& a = j.at("a");
  const auto& b = j.at("b");
  if (a.size() != 6 || b.size() != 4)
    throw Error(ErrorKind::kConfig, "Sellmeier set needs 6 a and 4 b terms");
  for (int i = 0; i < 6; ++i) c.a[i] = a[i].get<double>();
  for (int i = 0; i < 4; ++i) c.b[i] = b[i].get<double>();
  return c;
}

}  // namespace

void FrequencyGrid::validate() const {
  if (n_points < 16) throw Error(ErrorKind::kDomain, "grid needs at least 16 points");
  if (!(span > 0.0)) throw Error(ErrorKind::kDomain, "grid span must be positive");
}

Eigen::VectorXd FrequencyGrid::weights() const {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n_points, spacing());
  w(0) *= 0.5;
  w(n_points - 1) *= 0.5;
  return w;
}

double PumpEnvelope::raw(double d) const {
  auto g = [](double x, double s) { return std::exp(-x * x / (2.0 * s * s)); };
  if (kind == PumpKind::kCwGaussian) return g(d, linewidth);
  double sum = 0.0;
  for (int n = -n_lines; n <= n_lines; ++n)
    sum += g(d - n * comb_spacing, linewidth);
  return g(d, envelope_bandwidth) * sum;
}

double PumpEnvelope::operator()(double d) const { return raw(d) / raw(0.0); }

PumpEnvelope PumpEnvelope::comb(double linewidth, double spacing,
                                double envelope_bandwidth) {
  if (!(linewidth > 0 && spacing > 0 && envelope_bandwidth > 0))
    throw Error(ErrorKind::kDomain, "comb parameters must be positive");
  PumpEnvelope p;
  p.kind = PumpKind::kModeLockedComb;
  p.linewidth = linewidth;
  p.comb_spacing = spacing;
  p.envelope_bandwidth = envelope_bandwidth;
  p.n_lines = static_cast<int>(std::ceil(3.0 * envelope_bandwidth / spacing));
  return p;
}

PumpEnvelope PumpEnvelope::cw(double linewidth) {
  if (!(linewidth > 0)) throw Error(ErrorKind::kDomain, "linewidth must be positive");
  PumpEnvelope p;
  p.kind = PumpKind::kCwGaussian;
  p.linewidth = linewidth;
  return p;
}

double SellmeierCoefficients::index(double l, double t) const {
  const double f = (t - 24.5) * (t + 570.82);
  const double l2 = l * l;
  const double p = a[2] + b[2] * f;
  const double n2 = a[0] + b[0] * f + (a[1] + b[1] * f) / (l2 - p * p) +
                    (a[3] + b[3] * f) / (l2 - a[4] * a[4]) - a[5] * l2;
  if (!(n2 > 0.0)) throw Error(ErrorKind::kDomain, "Sellmeier index undefined at this wavelength");
  return std::sqrt(n2);
}

SellmeierCoefficients mgo_ln_extraordinary() {
  return {{5.756, 0.0983, 0.2020, 189.32, 12.52, 1.32e-2},
          {2.860e-6, 4.700e-8, 6.113e-8, 1.516e-4}};
}

SellmeierCoefficients mgo_ln_ordinary() {
  return {{5.653, 0.1185, 0.2091, 89.61, 10.85, 1.97e-2},
          {7.941e-7, 3.134e-8, -4.641e-9, -2.188e-6}};
}

SellmeierSet load_sellmeier(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open Sellmeier file " + path);
  try {
    json j = json::parse(in);
    SellmeierSet s;
    s.version = j.at("version").get<std::string>();
    s.extraordinary = coefficients_from_json(j.at("extraordinary"));
    s.ordinary = coefficients_from_json(j.at("ordinary"));
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("bad Sellmeier file: ") + e.what());
  }
}

double PhaseMatching::wavenumber(const SellmeierCoefficients& c,
                                 double omega) const {
  const double lambda_um = kTwoPi * kSpeedOfLight / omega * 1e6;
  return c.index(lambda_um, temperature) * omega / kSpeedOfLight;
}

double PhaseMatching::delta_k(double ws, double wi) const {
  auto raw = [&](double s, double i) {
    return wavenumber(signal, s) + wavenumber(idler, i) - wavenumber(pump, s + i);
  };
  return raw(ws, wi) - raw(center_signal, center_idler);
}

double PhaseMatching::operator()(double ws, double wi) const {
  const double x = delta_k(ws, wi) * length;
  if (gaussian_approx) return std::exp(-gaussian_sinc_gamma() * x * x);
  return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
}

double gaussian_sinc_gamma() {
  static const double gamma = [] {
    auto f = [](double x) { return std::sin(x) / x - 0.5; };
    boost::math::tools::eps_tolerance<double> tol(50);
    std::uintmax_t iters = 100;
    auto r = boost::math::tools::toms748_solve(f, 1.0, 3.0, tol, iters);
    const double xh = 0.5 * (r.first + r.second);
    return std::log(2.0) / (xh * xh);
  }();
  return gamma;
}

double JointSpectralAmplitude::norm_squared() const {
  const Eigen::VectorXd ws = grid_s.weights();
  const Eigen::VectorXd wi = grid_i.weights();
  return (ws.transpose() * values.cwiseAbs2() * wi)(0, 0);
}

JointSpectralAmplitude normalize(JointSpectralAmplitude jsa) {
  const double n2 = jsa.norm_squared();
  if (!(n2 > 0.0) || !std::isfinite(n2))
    throw Error(ErrorKind::kDomain, "joint spectral amplitude vanishes on the grid");
  jsa.values /= std::sqrt(n2);
  jsa.normalized = true;
  return jsa;
}

JointSpectralAmplitude build_jsa(const PumpEnvelope& pump,
                                 const PhaseMatching& pm,
                                 const FrequencyGrid& grid_s,
                                 const FrequencyGrid& grid_i) {
  grid_s.validate();
  grid_i.validate();
  JointSpectralAmplitude j;
  j.grid_s = grid_s;
  j.grid_i = grid_i;
  j.values.resize(grid_s.n_points, grid_i.n_points);
  const double pump_center = pm.center_signal + pm.center_idler;
  const int ns = grid_s.n_points, ni = grid_i.n_points;
  // Axis and sum-frequency caches; the sum lattice is exact when both grids
  // share a spacing.
  const bool lattice = std::abs(grid_s.spacing() - grid_i.spacing()) <=
                       1e-12 * grid_s.spacing();
  const double k0 = pm.wavenumber(pm.signal, pm.center_signal) +
                    pm.wavenumber(pm.idler, pm.center_idler) -
                    pm.wavenumber(pm.pump, pump_center);
  std::vector<double> ks(ns), ki(ni);
  for (int a = 0; a < ns; ++a)
    ks[a] = pm.wavenumber(pm.signal, grid_s.center + grid_s.offset(a));
  for (int b = 0; b < ni; ++b)
    ki[b] = pm.wavenumber(pm.idler, grid_i.center + grid_i.offset(b));
  auto sum_freq = [&](int a, int b) {
    return grid_s.center + grid_s.offset(a) + grid_i.center + grid_i.offset(b);
  };
  std::vector<double> kp, alpha;
  if (lattice) {
    kp.resize(ns + ni - 1);
    alpha.resize(ns + ni - 1);
    for (int m = 0; m < ns + ni - 1; ++m) {
      const int a = std::min(m, ns - 1), b = m - a;
      const double wp = sum_freq(a, b);
      kp[m] = pm.wavenumber(pm.pump, wp);
      alpha[m] = pump(wp - pump_center);
    }
  }
  const double gamma = gaussian_sinc_gamma();
  for (int a = 0; a < ns; ++a) {
    for (int b = 0; b < ni; ++b) {
      double kpump, amp;
      if (lattice) {
        kpump = kp[a + b];
        amp = alpha[a + b];
      } else {
        const double wp = sum_freq(a, b);
        kpump = pm.wavenumber(pm.pump, wp);
        amp = pump(wp - pump_center);
      }
      const double x = (ks[a] + ki[b] - kpump - k0) * pm.length;
      double phi;
      if (pm.gaussian_approx) phi = std::exp(-gamma * x * x);
      else phi = std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
      j.values(a, b) = amp * phi;
    }
  }
  return normalize(std::move(j));
}

JointSpectralAmplitude apply_dwdm(const JointSpectralAmplitude& jsa,
                                  double channel_center, double channel_width,
                                  FilterProfile profile, FilterAxes axes) {
  if (!(channel_width > 0.0)) throw Error(ErrorKind::kDomain, "channel width must be positive");
  auto inside = [&](const FrequencyGrid& g) {
    return std::abs(channel_center - g.center) <= 0.5 * g.span + 0.5 * channel_width;
  };
  const bool on_s = axes != FilterAxes::kIdler;
  const bool on_i = axes != FilterAxes::kSignal;
  if ((on_s && !inside(jsa.grid_s)) || (on_i && !inside(jsa.grid_i)))
    throw Error(ErrorKind::kDomain, "DWDM channel lies outside the grid");
  JointSpectralAmplitude out = jsa;
  const double before = jsa.norm_squared();
  for (int a = 0; a < jsa.grid_s.n_points; ++a) {
    const double ts = on_s ? filter_amplitude(jsa.grid_s.center + jsa.grid_s.offset(a) - channel_center,
                                              channel_width, profile)
                           : 1.0;
    for (int b = 0; b < jsa.grid_i.n_points; ++b) {
      const double ti = on_i ? filter_amplitude(jsa.grid_i.center + jsa.grid_i.offset(b) - channel_center,
                                                channel_width, profile)
                             : 1.0;
      out.values(a, b) *= ts * ti;
    }
  }
  const double after = out.norm_squared();
  if (!(after > 0.0)) throw Error(ErrorKind::kDomain, "DWDM channel blocks the whole amplitude");
  out = normalize(std::move(out));
  out.pass_probability = after / before;
  return out;
}

SchmidtResult schmidt_decompose(const JointSpectralAmplitude& jsa) {
  if (!jsa.normalized || std::abs(jsa.norm_squared() - 1.0) > 1e-9)
    throw Error(ErrorKind::kPrecondition, "Schmidt decomposition needs a normalized JSA");
  const Eigen::VectorXd rs = jsa.grid_s.weights().cwiseSqrt();
  const Eigen::VectorXd ri = jsa.grid_i.weights().cwiseSqrt();
  Eigen::MatrixXcd k = rs.asDiagonal() * jsa.values * ri.asDiagonal();
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(k, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SchmidtResult r;
  r.eigenvalues = svd.singularValues().cwiseAbs2();
  r.eigenvalues /= r.eigenvalues.sum();
  r.signal_modes = svd.matrixU();
  r.idler_modes = svd.matrixV().conjugate();
  r.entropy = 0.0;
  for (Eigen::Index m = 0; m < r.eigenvalues.size(); ++m) {
    const double l = r.eigenvalues(m);
    if (l > 0.0) r.entropy -= l * std::log2(l);
  }
  r.entropy = std::max(r.entropy, 0.0);
  return r;
}

double visibility(const JointSpectralAmplitude& jsa) {
  if (!jsa.normalized) throw Error(ErrorKind::kPrecondition, "visibility needs a normalized JSA");
  const Eigen::VectorXd ws = jsa.grid_s.weights();
  const Eigen::VectorXd wi = jsa.grid_i.weights();
  const auto& j = jsa.values;
  // E = sum_{1,1'} K(1,1') K(1',1) w1 w1', K(1,1') = sum_2 J(1,2) J*(1',2) w2.
  const Eigen::MatrixXcd kern = j * wi.asDiagonal() * j.adjoint();
  const Eigen::MatrixXcd kw = kern * ws.asDiagonal();
  const std::complex<double> e = (kw.cwiseProduct(kw.transpose())).sum();
  const double norm = (ws.transpose() * j.cwiseAbs2() * wi)(0, 0);
  return e.real() / (norm * norm);
}

JointSpectralAmplitude transpose(const JointSpectralAmplitude& jsa) {
  JointSpectralAmplitude t = jsa;
  std::swap(t.grid_s, t.grid_i);
  t.values = jsa.values.transpose();
  return t;
}

void write_jsa(const JointSpectralAmplitude& jsa, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  out << "# zalm-jsa 1\n" << std::setprecision(17);
  out << "grid_s " << jsa.grid_s.center << ' ' << jsa.grid_s.span << ' '
      << jsa.grid_s.n_points << '\n';
  out << "grid_i " << jsa.grid_i.center << ' ' << jsa.grid_i.span << ' '
      << jsa.grid_i.n_points << '\n';
  out << "normalized " << (jsa.normalized ? 1 : 0) << '\n';
  out << "pass_probability " << jsa.pass_probability << '\n';
  out << "data\n";
  for (int a = 0; a < jsa.grid_s.n_points; ++a) {
    for (int b = 0; b < jsa.grid_i.n_points; ++b)
      out << jsa.values(a, b).real() << ' ' << jsa.values(a, b).imag()
          << (b + 1 < jsa.grid_i.n_points ? ' ' : '\n');
  }
}

JointSpectralAmplitude read_jsa(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  std::string line, key;
  std::getline(in, line);
  if (line.rfind("# zalm-jsa 1", 0) != 0) throw Error(ErrorKind::kIo, "not a JSA file: " + path);
  JointSpectralAmplitude j;
  int normalized = 0;
  in >> key >> j.grid_s.center >> j.grid_s.span >> j.grid_s.n_points;
  in >> key >> j.grid_i.center >> j.grid_i.span >> j.grid_i.n_points;
  in >> key >> normalized >> key >> j.pass_probability >> key;
  if (!in || key != "data") throw Error(ErrorKind::kIo, "malformed JSA header in " + path);
  j.grid_s.validate();
  j.grid_i.validate();
  j.normalized = normalized != 0;
  j.values.resize(j.grid_s.n_points, j.grid_i.n_points);
  for (int a = 0; a < j.grid_s.n_points; ++a)
    for (int b = 0; b < j.grid_i.n_points; ++b) {
      double re = 0, im = 0;
      in >> re >> im;
      j.values(a, b) = {re, im};
    }
  if (!in) throw Error(ErrorKind::kIo, "truncated JSA data in " + path);
  return j;
}

JointSpectralAmplitude reference_jsa(const SpectralConfig& cfg, bool filtered) {
  PhaseMatching pm;
  if (!cfg.sellmeier_file.empty()) {
    auto s = load_sellmeier(cfg.sellmeier_file);
    pm.signal = s.extraordinary;
    pm.idler = s.ordinary;
    pm.pump = s.extraordinary;
  }
  pm.length = cfg.crystal_length;
  pm.gaussian_approx = cfg.gaussian_approx;
  pm.temperature = cfg.temperature;
  const double w0 = kTwoPi * kSpeedOfLight / cfg.center_wavelength;
  pm.center_signal = w0;
  pm.center_idler = w0;
  auto pump = PumpEnvelope::comb(kTwoPi * cfg.pump_linewidth_hz,
                                 kTwoPi * cfg.comb_spacing_hz,
                                 kTwoPi * cfg.comb_bandwidth_hz);
  FrequencyGrid g{w0, kTwoPi * cfg.grid_span_hz, cfg.n_points};
  auto jsa = build_jsa(pump, pm, g, g);
  if (!filtered) return jsa;
  return apply_dwdm(jsa, w0, kTwoPi * cfg.channel_width_hz, cfg.channel_profile);
}

SpectralSummary summarize(const JointSpectralAmplitude& jsa) {
  auto s = schmidt_decompose(jsa);
  SpectralSummary out;
  out.entropy = s.entropy;
  out.purity = s.purity();
  out.schmidt_number = 1.0 / out.purity;
  out.visibility = visibility(jsa);
  out.pass_probability = jsa.pass_probability;
  return out;
}

double fit_crystal_length(SpectralConfig cfg, double target, double lo,
                          double hi) {
  auto f = [&](double len) {
    cfg.crystal_length = len;
    return schmidt_decompose(reference_jsa(cfg)).entropy - target;
  };
  const double flo = f(lo), fhi = f(hi);
  if (flo * fhi > 0.0)
    throw Error(ErrorKind::kNumerical, "target entropy not bracketed by crystal length range");
  boost::math::tools::eps_tolerance<double> tol(30);
  std::uintmax_t iters = 200;
  auto r = boost::math::tools::bisect(f, lo, hi, tol, iters);
  return 0.5 * (r.first + r.second);
}

VisibilityOptimum max_visibility(SpectralConfig cfg, double lo, double hi) {
  auto neg_v = [&](double len) {
    cfg.crystal_length = len;
    return -visibility(reference_jsa(cfg));
  };
  std::uintmax_t iters = 200;
  auto r = boost::math::tools::brent_find_minima(neg_v, lo, hi, 40, iters);
  cfg.crystal_length = r.first;
  auto s = summarize(reference_jsa(cfg));
  return {r.first, s.visibility, s.entropy};
}

}  // namespace zalm::spectral
