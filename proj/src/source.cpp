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

#include "zalm/source.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>

#include "zalm/error.hpp"

namespace zalm::source {
namespace {

using fock::Branch;
using fock::ModeLabel;
using fock::Pol;
using fock::Source;

ModeLabel mode(Source s, Branch b, Pol p) { return ModeLabel{s, b, p}; }

const std::array<std::pair<ClickTuple, Parity>, 4> kParityTable = {{
    {{1, 0, 1, 0}, {0, 0}},
    {{0, 1, 0, 1}, {0, 1}},
    {{0, 1, 1, 0}, {1, 1}},
    {{1, 0, 0, 1}, {1, 0}},
}};

spin::TeleportResult teleport(const fock::TruncatedState& rho,
                              spin::BellState heralded,
                              const FidelityConfig& cfg) {
  auto cav = spin::AtomCavityParams::from_cooperativity(cfg.cooperativity,
                                                        cfg.kwg_over_kappa);
  spin::TeleportInputs in{rho, spin::reflection_coeff(cav, true),
                          spin::reflection_coeff(cav, false), cfg.p_dark()};
  in.heralded = heralded;
  in.dark_model = cfg.dark_model;
  in.station_efficiency = cfg.station_efficiency;
  in.non_bell_fidelity = cfg.non_bell_fidelity;
  return spin::teleport_fidelity(in);
}

}  // namespace

void SpdcParams::validate() const {
  if (!(mean_photon_number >= 0.0 && mean_photon_number < 0.5))
    throw Error(ErrorKind::kDomain, "mean photon number must lie in [0, 0.5)");
  if (!(channel_width > 0.0 && pm_bandwidth >= channel_width))
    throw Error(ErrorKind::kDomain, "need pm_bandwidth >= channel_width > 0");
  if (!(rep_rate >= 0.0)) throw Error(ErrorKind::kDomain, "repetition rate must be non-negative");
}

int SpdcParams::n_modes() const {
  return static_cast<int>(std::floor(pm_bandwidth / channel_width + 1e-9));
}

std::optional<Parity> parity_bits(const ClickTuple& pattern) {
  for (const auto& [p, bits] : kParityTable)
    if (p == pattern) return bits;
  return std::nullopt;
}

std::vector<ClickTuple> accepted_patterns() {
  std::vector<ClickTuple> out;
  for (const auto& row : kParityTable) out.push_back(row.first);
  return out;
}

ModeLabel detector_mode(int d) {
  switch (d) {
    case 1: return mode(Source::kA, Branch::kIdler, Pol::kV);
    case 2: return mode(Source::kB, Branch::kIdler, Pol::kV);
    case 3: return mode(Source::kA, Branch::kIdler, Pol::kH);
    case 4: return mode(Source::kB, Branch::kIdler, Pol::kH);
  }
  throw Error(ErrorKind::kStructural, "detector index must be 1..4");
}

double tmsv_amplitude(double n_mean, int n) {
  return std::sqrt(std::pow(n_mean, n) / std::pow(1.0 + n_mean, n + 1));
}

fock::PureState build_source_pure(const SpdcParams& params, int cutoff) {
  params.validate();
  if (cutoff < 4)
    throw Error(ErrorKind::kPrecondition, "source cutoff must be at least 4 (two pairs)");
  auto basis = fock::make_basis(fock::all_mode_labels(), cutoff);
  const std::array<std::pair<ModeLabel, ModeLabel>, 4> processes = {{
      {mode(Source::kA, Branch::kSignal, Pol::kH), mode(Source::kA, Branch::kIdler, Pol::kH)},
      {mode(Source::kA, Branch::kSignal, Pol::kV), mode(Source::kA, Branch::kIdler, Pol::kV)},
      {mode(Source::kB, Branch::kSignal, Pol::kH), mode(Source::kB, Branch::kIdler, Pol::kH)},
      {mode(Source::kB, Branch::kSignal, Pol::kV), mode(Source::kB, Branch::kIdler, Pol::kV)},
  }};
  const double n = params.mean_photon_number;
  const int max_pairs = cutoff / 2;
  fock::CVector psi = fock::CVector::Zero(basis->dim());
  double kept = 0.0;
  std::array<int, 4> k{};
  for (k[0] = 0; k[0] <= max_pairs; ++k[0])
    for (k[1] = 0; k[0] + k[1] <= max_pairs; ++k[1])
      for (k[2] = 0; k[0] + k[1] + k[2] <= max_pairs; ++k[2])
        for (k[3] = 0; k[0] + k[1] + k[2] + k[3] <= max_pairs; ++k[3]) {
          std::vector<int> occ(8, 0);
          double amp = 1.0;
          for (int p = 0; p < 4; ++p) {
            occ[processes[p].first.ordinal()] = k[p];
            occ[processes[p].second.ordinal()] = k[p];
            amp *= tmsv_amplitude(n, k[p]);
          }
          psi(basis->index_of(occ)) = amp;
          kept += amp * amp;
        }
  return fock::PureState{basis, psi, std::max(0.0, 1.0 - kept)};
}

fock::TruncatedState build_source_state(const SpdcParams& params, int cutoff) {
  auto p = build_source_pure(params, cutoff);
  return fock::TruncatedState::from_pure(p.basis, p.psi, p.norm_deficit);
}

fock::PureState apply_bsa(const fock::PureState& state) {
  // Images of the input creation operators: a4 -> (D1 - D2)/sqrt2,
  // b1 -> (D1 + D2)/sqrt2, and likewise a3/b2 onto D3/D4.
  Eigen::Matrix2cd u;
  u << 1.0, 1.0, -1.0, 1.0;
  u /= std::sqrt(2.0);
  auto s = fock::apply_two_mode_unitary(state, detector_mode(1), detector_mode(2), u);
  return fock::apply_two_mode_unitary(s, detector_mode(3), detector_mode(4), u);
}

DetectorBank uniform_detectors(double efficiency, double dark_prob) {
  DetectorBank d;
  for (auto& x : d) x = fock::ThresholdDetector{efficiency, dark_prob};
  return d;
}

namespace {

void check_pattern(const ClickTuple& pattern) {
  for (int c : pattern)
    if (c != 0 && c != 1) throw Error(ErrorKind::kStructural, "click entries must be 0 or 1");
}

std::pair<fock::DetectorMap, fock::Pattern> detector_maps(const DetectorBank& dets,
                                                          const ClickTuple& pattern) {
  check_pattern(pattern);
  fock::DetectorMap dm;
  fock::Pattern pat;
  for (int d = 1; d <= 4; ++d) {
    dm[detector_mode(d)] = dets[d - 1];
    pat[detector_mode(d)] = pattern[d - 1] ? fock::Click::kClick : fock::Click::kNoClick;
  }
  return {dm, pat};
}

HeraldRecord finish_herald(fock::Measurement m, const ClickTuple& pattern,
                           double visibility, int channel) {
  if (!(visibility >= 0.0 && visibility <= 1.0))
    throw Error(ErrorKind::kDomain, "visibility must lie in [0,1]");
  HeraldRecord r;
  r.pattern = pattern;
  r.channel_index = channel;
  auto bits = parity_bits(pattern);
  r.accepted = bits.has_value();
  if (bits) r.parity = *bits;
  r.herald_probability = m.probability;
  if (m.state) {
    fock::CMatrix rho = m.state->rho();
    const auto& b = m.state->basis();
    const long i = b.index_of({1, 0, 0, 1});
    const long j = b.index_of({0, 1, 1, 0});
    if (i >= 0 && j >= 0) {
      rho(i, j) *= visibility;
      rho(j, i) *= visibility;
    }
    r.heralded_state.emplace(m.state->basis_ptr(), rho, 0.0);
  }
  return r;
}

}  // namespace

HeraldRecord herald(const fock::PureState& analyzed, const DetectorBank& detectors,
                    const ClickTuple& pattern, double visibility, int channel) {
  auto [dm, pat] = detector_maps(detectors, pattern);
  return finish_herald(fock::measure_threshold(analyzed, dm, pat), pattern,
                       visibility, channel);
}

HeraldRecord herald(const fock::TruncatedState& analyzed,
                    const DetectorBank& detectors, const ClickTuple& pattern,
                    double visibility, int channel) {
  auto [dm, pat] = detector_maps(detectors, pattern);
  return finish_herald(fock::measure_threshold(analyzed, dm, pat), pattern,
                       visibility, channel);
}

spin::BellState heralded_bell_state(const Parity& p) {
  return p.m1 == 0 ? spin::BellState::kPsiPlus : spin::BellState::kPsiMinus;
}

double bell_sector_weight(const fock::TruncatedState& state) {
  return spin::bell_block(state).trace().real();
}

double both_receive_probability(const fock::TruncatedState& state) {
  const auto& b = state.basis();
  const auto modes = spin::station_modes();
  std::array<int, 4> pos;
  for (int k = 0; k < 4; ++k) pos[k] = b.position(modes[k]);
  double p = 0.0;
  for (std::size_t s = 0; s < b.dim(); ++s) {
    const int na = b.occupation(s, pos[0]) + b.occupation(s, pos[1]);
    const int nb = b.occupation(s, pos[2]) + b.occupation(s, pos[3]);
    if (na >= 1 && nb >= 1) p += state.rho()(s, s).real();
  }
  return p;
}

double p_gen(const SpdcParams& params, const DetectorBank& detectors,
             const std::vector<ClickTuple>& patterns, int cutoff) {
  if (params.mean_photon_number == 0.0) return 0.0;
  const auto analyzed = apply_bsa(build_source_pure(params, cutoff));
  double total = 0.0;
  for (const auto& pat : patterns) {
    auto rec = herald(analyzed, detectors, pat);
    if (rec.heralded_state) total += rec.herald_probability * bell_sector_weight(*rec.heralded_state);
  }
  return total;
}

double p_zalm(double pg, int n_modes) {
  if (n_modes < 1) throw Error(ErrorKind::kPrecondition, "n_modes must be at least 1");
  if (!(pg >= 0.0 && pg <= 1.0)) throw Error(ErrorKind::kDomain, "p_gen must lie in [0,1]");
  if (pg == 1.0) return 1.0;
  return -std::expm1(n_modes * std::log1p(-pg));
}

double emission_rate(const SpdcParams& params, double pz) {
  return pz * params.rep_rate;
}

Pileup detector_pileup(const SpdcParams& params, double reset_time,
                       double pair_rate) {
  if (!(reset_time > 0.0)) throw Error(ErrorKind::kPrecondition, "reset time must be positive");
  Pileup p;
  p.mean_occupancy = reset_time * pair_rate / (4.0 * params.n_modes());
  const double mu = p.mean_occupancy;
  p.p_multi = -std::expm1(-mu) - mu * std::exp(-mu);
  return p;
}

fock::TruncatedState free_running_state(double n_mean, int cutoff) {
  if (!(n_mean >= 0.0 && n_mean < 0.5))
    throw Error(ErrorKind::kDomain, "mean photon number must lie in [0, 0.5)");
  if (cutoff < 4)
    throw Error(ErrorKind::kPrecondition, "source cutoff must be at least 4 (two pairs)");
  const auto m = spin::station_modes();
  auto basis = fock::make_basis({m[0], m[1], m[2], m[3]}, cutoff);
  fock::CVector psi = fock::CVector::Zero(basis->dim());
  double kept = 0.0;
  // Pairs on (A.s.H, B.s.V) and (A.s.V, B.s.H).
  for (int j = 0; 2 * j <= cutoff; ++j)
    for (int k = 0; 2 * (j + k) <= cutoff; ++k) {
      const double amp = tmsv_amplitude(n_mean, j) * tmsv_amplitude(n_mean, k);
      psi(basis->index_of({j, k, k, j})) = amp;
      kept += amp * amp;
    }
  return fock::TruncatedState::from_pure(basis, psi, std::max(0.0, 1.0 - kept));
}

spin::TeleportResult zalm_fidelity(double n_mean, const FidelityConfig& cfg,
                                   const ClickTuple& pattern) {
  SpdcParams p;
  p.mean_photon_number = n_mean;
  const auto analyzed = apply_bsa(build_source_pure(p, cfg.cutoff));
  auto rec = herald(analyzed,
                    uniform_detectors(cfg.detector_efficiency, cfg.detector_dark_prob),
                    pattern, cfg.visibility);
  if (!rec.accepted) throw Error(ErrorKind::kPrecondition, "pattern does not herald a Bell pair");
  if (!rec.heralded_state)
    throw Error(ErrorKind::kUnnormalizable, "herald probability below threshold");
  return teleport(*rec.heralded_state, heralded_bell_state(rec.parity), cfg);
}

spin::TeleportResult free_running_fidelity(double n_mean,
                                           const FidelityConfig& cfg) {
  return teleport(free_running_state(n_mean, cfg.cutoff),
                  spin::BellState::kPsiPlus, cfg);
}

std::vector<CurvePoint> fidelity_vs_ns(SourceKind kind,
                                       const std::vector<double>& ns,
                                       const FidelityConfig& cfg) {
  std::vector<CurvePoint> out;
  out.reserve(ns.size());
  for (double n : ns) {
    if (!(n > 0.0 && n < 0.5)) throw Error(ErrorKind::kDomain, "N_s sweep must lie in (0, 0.5)");
    const double f = kind == SourceKind::kZalm ? zalm_fidelity(n, cfg).fidelity
                                               : free_running_fidelity(n, cfg).fidelity;
    out.push_back({n, f});
  }
  return out;
}

FreeRunningResult free_running_spdc(const SpdcParams& params,
                                    double filter_bandwidth,
                                    const FidelityConfig& cfg,
                                    double target, double lo, double hi,
                                    int n_points) {
  if (!(filter_bandwidth > 0.0)) throw Error(ErrorKind::kPrecondition, "filter bandwidth must be positive");
  if (!(lo > 0.0 && hi > lo && n_points >= 3)) throw Error(ErrorKind::kDomain, "bad N_s sweep range");
  FreeRunningResult r;
  r.filter_bandwidth = filter_bandwidth;
  std::vector<double> ns(n_points);
  for (int i = 0; i < n_points; ++i)
    ns[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n_points - 1));
  r.curve = fidelity_vs_ns(SourceKind::kFreeRunning, ns, cfg);
  std::size_t best = 0;
  for (std::size_t i = 1; i < r.curve.size(); ++i)
    if (r.curve[i].fidelity > r.curve[best].fidelity) best = i;
  r.max_fidelity = r.curve[best].fidelity;
  r.ns_at_max = r.curve[best].n_mean;
  std::size_t cross = r.curve.size();
  for (std::size_t i = best; i < r.curve.size(); ++i)
    if (r.curve[i].fidelity < target) {
      cross = i;
      break;
    }
  if (r.max_fidelity < target || cross == r.curve.size()) return r;
  auto f = [&](double n) { return free_running_fidelity(n, cfg).fidelity - target; };
  boost::math::tools::eps_tolerance<double> tol(40);
  std::uintmax_t iters = 200;
  auto root = boost::math::tools::bisect(f, r.curve[cross - 1].n_mean,
                                         r.curve[cross].n_mean, tol, iters);
  r.found = true;
  r.ns_required = 0.5 * (root.first + root.second);
  r.p_spdc = bell_sector_weight(free_running_state(r.ns_required, cfg.cutoff));
  r.rate = r.p_spdc * params.rep_rate;
  return r;
}

}  // namespace zalm::source
