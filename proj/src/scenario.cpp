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

#include "zalm/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "zalm/converter.hpp"
#include "zalm/error.hpp"
#include "zalm/link.hpp"
#include "zalm/parallel.hpp"
#include "zalm/source.hpp"
#include "zalm/spectral.hpp"
#include "zalm/version.hpp"

namespace zalm::scenario {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void config_error(const std::string& msg) {
  throw Error(ErrorKind::kConfig, msg);
}

// ---------------------------------------------------------------- schema

enum class Kind { kReal, kRealOrNull, kInt, kBool, kString, kEnum, kRealArray, kIntArray };

struct Field {
  Kind kind;
  std::vector<std::string> choices;  // kEnum
};

using SectionSchema = std::map<std::string, Field>;

Field R() { return {Kind::kReal, {}}; }
Field RN() { return {Kind::kRealOrNull, {}}; }
Field I() { return {Kind::kInt, {}}; }
Field B() { return {Kind::kBool, {}}; }
Field S() { return {Kind::kString, {}}; }
Field E(std::vector<std::string> c) { return {Kind::kEnum, std::move(c)}; }
Field RA() { return {Kind::kRealArray, {}}; }
Field IA() { return {Kind::kIntArray, {}}; }

const std::map<std::string, SectionSchema>& schema() {
  static const std::map<std::string, SectionSchema> s = {
      {"source",
       {{"mean_photon_number", R()}, {"pm_bandwidth_hz", R()},
        {"channel_width_hz", R()}, {"rep_rate_hz", R()}, {"n_modes", I()},
        {"n_modes_values", IA()}, {"cutoff", I()}, {"visibility", R()},
        {"detector_efficiency", R()}, {"detector_dark_prob", R()},
        {"non_bell_fidelity", R()}, {"dark_model", E({"paper", "conditional"})},
        {"pattern", E({"reference", "all"})}, {"spdc_filter_bandwidth_hz", R()},
        {"target_fidelity", R()}, {"ns_min", R()}, {"ns_max", R()},
        {"n_points", I()}, {"pileup_reset_time_s", R()},
        {"pileup_pair_rate_hz", R()}}},
      {"spectral",
       {{"center_wavelength_m", R()}, {"crystal_length_m", R()},
        {"gaussian_approx", B()}, {"temperature_c", R()},
        {"pump_linewidth_hz", R()}, {"comb_spacing_hz", R()},
        {"comb_bandwidth_hz", R()}, {"grid_span_hz", R()}, {"n_points", I()},
        {"channel_width_hz", R()},
        {"channel_profile", E({"gaussian", "rectangular"})},
        {"sellmeier_file", S()}, {"length_min_m", R()}, {"length_max_m", R()},
        {"n_lengths", I()}, {"write_jsa", B()}}},
      {"mode_converter",
       {{"fwhm_s", R()}, {"kappa_a_w_over_omega", R()},
        {"kappa_b_w_rad_per_s", R()}, {"delta_a_rad_per_s", R()},
        {"delta_b_rad_per_s", R()}, {"wavelength_m", R()},
        {"offset_min_tau", R()}, {"offset_max_tau", R()}, {"n_offsets", I()},
        {"q_min", R()}, {"q_max", R()}, {"n_q", I()}, {"n_samples", I()},
        {"rel_tol", R()}}},
      {"spin",
       {{"cooperativity", R()}, {"kwg_over_kappa", R()}, {"dark_rate_hz", R()},
        {"gate_window_s", R()}, {"station_efficiency", R()}}},
      {"link",
       {{"atmospheric_total_db", R()}, {"adaptive_optics_db", R()},
        {"mode_converter_db", R()}, {"cavity_db", R()},
        {"switch_array_db", R()}, {"detector_db", R()},
        {"switch_model", E({"fixed", "mzi_tree"})}, {"loss_per_mzi_db", R()},
        {"atmospheric_values", RA()}, {"fiber_values", RA()},
        {"l_gg_km", R()}, {"eta_min", R()}, {"eta_max", R()}, {"n_eta", I()}}},
      {"repeater",
       {{"k", I()}, {"k_values", IA()}, {"k_min", I()}, {"k_max", I()},
        {"k_per_decade", I()}, {"tau_comm_s", R()}, {"tau_comm_values", RA()},
        {"tau_reset_s", R()}, {"epsilon", RN()}, {"epsilons", RA()},
        {"eps_min", R()}, {"eps_max", R()}, {"n_eps", I()},
        {"policy", E({"continuous", "floor_at_one"})}, {"xi_zalm", R()},
        {"xi_spdc", R()}, {"tau0_zalm_s", R()}, {"tau0_spdc_s", R()},
        {"f_tele_zalm", R()}, {"f_tele_spdc", R()}, {"p_lost", R()},
        {"des_windows", I()}}},
      {"sweep",
       {{"axis", S()}, {"values", RA()}, {"start", R()}, {"stop", R()},
        {"n_points", I()}, {"spacing", E({"linear", "log"})}, {"output", S()}}},
  };
  return s;
}

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::kReal: return "a number";
    case Kind::kRealOrNull: return "a number or null";
    case Kind::kInt: return "an integer";
    case Kind::kBool: return "a boolean";
    case Kind::kString: return "a string";
    case Kind::kEnum: return "one of the listed names";
    case Kind::kRealArray: return "an array of numbers";
    case Kind::kIntArray: return "an array of integers";
  }
  return "?";
}

bool matches(const json& v, const Field& f) {
  switch (f.kind) {
    case Kind::kReal: return v.is_number();
    case Kind::kRealOrNull: return v.is_number() || v.is_null();
    case Kind::kInt: return v.is_number_integer();
    case Kind::kBool: return v.is_boolean();
    case Kind::kString: return v.is_string();
    case Kind::kEnum:
      return v.is_string() && std::find(f.choices.begin(), f.choices.end(),
                                        v.get<std::string>()) != f.choices.end();
    case Kind::kRealArray:
      return v.is_array() && std::all_of(v.begin(), v.end(),
                                         [](const json& e) { return e.is_number(); });
    case Kind::kIntArray:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) {
               return e.is_number_integer();
             });
  }
  return false;
}

void validate_schema(const json& doc) {
  if (!doc.is_object()) config_error("scenario must be a JSON object");
  static const std::set<std::string> top = {"name", "seed", "output_dir"};
  for (const auto& [key, value] : doc.items()) {
    if (top.count(key)) continue;
    auto it = schema().find(key);
    if (it == schema().end()) config_error("unknown top-level key '" + key + "'");
    if (!value.is_object()) config_error("section '" + key + "' must be an object");
    for (const auto& [fk, fv] : value.items()) {
      if (key == "sweep" && fk == "axis" && fv.is_array()) {
        if (fv.size() != 1) {
          config_error("field 'sweep.axis': one axis per sweep section; compose "
                       "multi-axis sweeps via multiple runs");
        }
        continue;
      }
      auto f = it->second.find(fk);
      if (f == it->second.end()) config_error("unknown key '" + key + "." + fk + "'");
      if (!matches(fv, f->second)) {
        std::string msg = "field '" + key + "." + fk + "' must be " + kind_name(f->second.kind);
        if (f->second.kind == Kind::kEnum) {
          msg += " (";
          for (std::size_t i = 0; i < f->second.choices.size(); ++i)
            msg += (i ? ", " : "") + f->second.choices[i];
          msg += ")";
        }
        config_error(msg);
      }
    }
  }
  if (doc.contains("name") && !doc["name"].is_string()) config_error("field 'name' must be a string");
  if (doc.contains("seed") && !doc["seed"].is_number_unsigned()) config_error("field 'seed' must be a non-negative integer");
  if (doc.contains("output_dir") && !doc["output_dir"].is_string()) config_error("field 'output_dir' must be a string");
}

// --------------------------------------------------------------- access

const json& section(const json& doc, const std::string& name) {
  static const json empty = json::object();
  auto it = doc.find(name);
  return it == doc.end() ? empty : *it;
}

template <typename T>
T get(const json& sec, const char* key, T fallback) {
  auto it = sec.find(key);
  return it == sec.end() ? fallback : it->get<T>();
}

template <typename T>
std::vector<T> get_list(const json& sec, const char* key, std::vector<T> fallback) {
  auto it = sec.find(key);
  return it == sec.end() ? fallback : it->get<std::vector<T>>();
}

void positive(const char* path, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) config_error(std::string("field '") + path + "' must be positive");
}

void in_range(const char* path, double v, double lo, double hi) {
  if (!(v >= lo && v <= hi)) {
    std::ostringstream os;
    os << "field '" << path << "' must lie in [" << lo << ", " << hi << "], got " << v;
    config_error(os.str());
  }
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) {
    v[i] = n == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  }
  return v;
}

std::vector<double> lin_grid(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return v;
}

// ------------------------------------------------------------ typed config

struct SourceCfg {
  source::SpdcParams spdc;
  source::FidelityConfig fid;
  int n_modes = 800;
  std::vector<int> n_modes_values;
  bool all_patterns = false;
  double filter_bw = 200e6;
  double target_fidelity = 0.998;
  double ns_min = 1e-5, ns_max = 0.1;
  int n_points = 30;
  double pileup_reset = 1e-9;
  double pileup_rate = 7.45e9;
};

struct ConverterCfg {
  converter::GaussianPulse pulse;
  converter::CavityModeParams cavity;
  double wavelength = 737e-9;
  double offset_min = -1.0, offset_max = 1.0;
  int n_offsets = 21;
  double q_min = 1e6, q_max = 1e8;
  int n_q = 21;
  converter::IntegrationOptions integ;
};

struct LinkCfg {
  link::LinkBudget budget;
  std::vector<double> atm_values;
  std::vector<double> fiber_values;
  double l_gg_km = 100.0;
  double eta_min = 1e-8, eta_max = 1e-2;
  int n_eta = 31;
};

struct RepeaterCfg {
  link::RepeaterParams base;
  std::vector<std::int64_t> k_values;
  std::int64_t k_min = 2, k_max = 1'000'000'000;
  int k_per_decade = 4;
  std::vector<double> tau_comm_values;
  std::vector<double> epsilons;
  double eps_min = 1e-6, eps_max = 5e-2;
  int n_eps = 25;
  std::optional<double> xi_zalm, xi_spdc, tau0_zalm, tau0_spdc, f_zalm, f_spdc;
  std::int64_t des_windows = 0;
};

struct Config {
  SourceCfg source;
  spectral::SpectralConfig spectral;
  double length_min = 0.05, length_max = 30.0;
  int n_lengths = 25;
  bool write_jsa = false;
  ConverterCfg conv;
  LinkCfg link;
  RepeaterCfg rep;
};

std::optional<double> opt_real(const json& sec, const char* key) {
  auto it = sec.find(key);
  if (it == sec.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

// Wraps module validation so the message names the section.
template <typename Fn>
void module_check(const char* sec, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) throw;
    config_error(std::string("section '") + sec + "': " + e.what());
  }
}

Config build_config(const json& doc) {
  Config c;
  {
    const json& s = section(doc, "source");
    auto& sc = c.source;
    sc.spdc.mean_photon_number = get(s, "mean_photon_number", sc.spdc.mean_photon_number);
    sc.spdc.pm_bandwidth = get(s, "pm_bandwidth_hz", sc.spdc.pm_bandwidth);
    sc.spdc.channel_width = get(s, "channel_width_hz", sc.spdc.channel_width);
    sc.spdc.rep_rate = get(s, "rep_rate_hz", sc.spdc.rep_rate);
    module_check("source", [&] { sc.spdc.validate(); });
    sc.n_modes = get(s, "n_modes", sc.spdc.n_modes());
    if (sc.n_modes < 1) config_error("field 'source.n_modes' must be >= 1");
    sc.n_modes_values = get_list<int>(s, "n_modes_values", {1, 3, 10, 30, 100, 300, 800, 1000, 3000, 10000});
    for (int m : sc.n_modes_values) {
      if (m < 1) config_error("field 'source.n_modes_values' entries must be >= 1");
    }
    sc.fid.cutoff = get(s, "cutoff", sc.fid.cutoff);
    if (sc.fid.cutoff < 4) config_error("field 'source.cutoff' must be >= 4");
    sc.fid.visibility = get(s, "visibility", sc.fid.visibility);
    in_range("source.visibility", sc.fid.visibility, 0.0, 1.0);
    sc.fid.detector_efficiency = get(s, "detector_efficiency", sc.fid.detector_efficiency);
    in_range("source.detector_efficiency", sc.fid.detector_efficiency, 0.0, 1.0);
    sc.fid.detector_dark_prob = get(s, "detector_dark_prob", sc.fid.detector_dark_prob);
    in_range("source.detector_dark_prob", sc.fid.detector_dark_prob, 0.0, 1.0);
    sc.fid.non_bell_fidelity = get(s, "non_bell_fidelity", sc.fid.non_bell_fidelity);
    in_range("source.non_bell_fidelity", sc.fid.non_bell_fidelity, 0.0, 1.0);
    sc.fid.dark_model = get<std::string>(s, "dark_model", "paper") == "paper"
                            ? spin::DarkModel::kPaper
                            : spin::DarkModel::kConditional;
    sc.all_patterns = get<std::string>(s, "pattern", "reference") == "all";
    sc.filter_bw = get(s, "spdc_filter_bandwidth_hz", sc.filter_bw);
    positive("source.spdc_filter_bandwidth_hz", sc.filter_bw);
    sc.target_fidelity = get(s, "target_fidelity", sc.target_fidelity);
    in_range("source.target_fidelity", sc.target_fidelity, 0.25, 1.0);
    sc.ns_min = get(s, "ns_min", sc.ns_min);
    sc.ns_max = get(s, "ns_max", sc.ns_max);
    positive("source.ns_min", sc.ns_min);
    in_range("source.ns_max", sc.ns_max, sc.ns_min, 0.49);
    sc.n_points = get(s, "n_points", sc.n_points);
    if (sc.n_points < 2) config_error("field 'source.n_points' must be >= 2");
    sc.pileup_reset = get(s, "pileup_reset_time_s", sc.pileup_reset);
    positive("source.pileup_reset_time_s", sc.pileup_reset);
    sc.pileup_rate = get(s, "pileup_pair_rate_hz", sc.pileup_rate);
    positive("source.pileup_pair_rate_hz", sc.pileup_rate);
  }
  {
    const json& s = section(doc, "spin");
    auto& f = c.source.fid;
    f.cooperativity = get(s, "cooperativity", f.cooperativity);
    in_range("spin.cooperativity", f.cooperativity, 0.0, 1e9);
    f.kwg_over_kappa = get(s, "kwg_over_kappa", f.kwg_over_kappa);
    in_range("spin.kwg_over_kappa", f.kwg_over_kappa, 0.0, 1.0);
    f.dark_rate = get(s, "dark_rate_hz", f.dark_rate);
    in_range("spin.dark_rate_hz", f.dark_rate, 0.0, 1e12);
    f.gate_window = get(s, "gate_window_s", f.gate_window);
    positive("spin.gate_window_s", f.gate_window);
    in_range("spin.gate_window_s (dark probability)", f.p_dark(), 0.0, 1.0);
    f.station_efficiency = get(s, "station_efficiency", f.station_efficiency);
    in_range("spin.station_efficiency", f.station_efficiency, 0.0, 1.0);
  }
  {
    const json& s = section(doc, "spectral");
    auto& sp = c.spectral;
    sp.center_wavelength = get(s, "center_wavelength_m", sp.center_wavelength);
    positive("spectral.center_wavelength_m", sp.center_wavelength);
    sp.crystal_length = get(s, "crystal_length_m", sp.crystal_length);
    positive("spectral.crystal_length_m", sp.crystal_length);
    sp.gaussian_approx = get(s, "gaussian_approx", sp.gaussian_approx);
    sp.temperature = get(s, "temperature_c", sp.temperature);
    sp.pump_linewidth_hz = get(s, "pump_linewidth_hz", sp.pump_linewidth_hz);
    positive("spectral.pump_linewidth_hz", sp.pump_linewidth_hz);
    sp.comb_spacing_hz = get(s, "comb_spacing_hz", sp.comb_spacing_hz);
    positive("spectral.comb_spacing_hz", sp.comb_spacing_hz);
    sp.comb_bandwidth_hz = get(s, "comb_bandwidth_hz", sp.comb_bandwidth_hz);
    positive("spectral.comb_bandwidth_hz", sp.comb_bandwidth_hz);
    sp.grid_span_hz = get(s, "grid_span_hz", sp.grid_span_hz);
    positive("spectral.grid_span_hz", sp.grid_span_hz);
    sp.n_points = get(s, "n_points", sp.n_points);
    if (sp.n_points < 8) config_error("field 'spectral.n_points' must be >= 8");
    sp.channel_width_hz = get(s, "channel_width_hz", sp.channel_width_hz);
    positive("spectral.channel_width_hz", sp.channel_width_hz);
    sp.channel_profile = get<std::string>(s, "channel_profile", "gaussian") == "gaussian"
                             ? spectral::FilterProfile::kGaussian
                             : spectral::FilterProfile::kRectangular;
    sp.sellmeier_file = get<std::string>(s, "sellmeier_file", sp.sellmeier_file);
    if (!sp.sellmeier_file.empty() && !fs::exists(sp.sellmeier_file)) {
      config_error("field 'spectral.sellmeier_file': no such file '" + sp.sellmeier_file + "'");
    }
    c.length_min = get(s, "length_min_m", c.length_min);
    c.length_max = get(s, "length_max_m", c.length_max);
    positive("spectral.length_min_m", c.length_min);
    in_range("spectral.length_max_m", c.length_max, c.length_min, 1e3);
    c.n_lengths = get(s, "n_lengths", c.n_lengths);
    if (c.n_lengths < 1) config_error("field 'spectral.n_lengths' must be >= 1");
    c.write_jsa = get(s, "write_jsa", c.write_jsa);
  }
  {
    const json& s = section(doc, "mode_converter");
    auto& cv = c.conv;
    cv.pulse.fwhm = get(s, "fwhm_s", cv.pulse.fwhm);
    positive("mode_converter.fwhm_s", cv.pulse.fwhm);
    cv.pulse.arrival = 10 * cv.pulse.fwhm;
    cv.cavity = converter::reference_cavity(cv.pulse);
    cv.cavity.kappa_a_w = get(s, "kappa_a_w_over_omega", 4.0) * cv.pulse.spectral_width();
    cv.cavity.kappa_b_w = get(s, "kappa_b_w_rad_per_s", cv.cavity.kappa_b_w);
    cv.cavity.delta_a = get(s, "delta_a_rad_per_s", 0.0);
    cv.cavity.delta_b = get(s, "delta_b_rad_per_s", 0.0);
    module_check("mode_converter", [&] {
      cv.pulse.validate();
      cv.cavity.validate();
    });
    cv.wavelength = get(s, "wavelength_m", cv.wavelength);
    positive("mode_converter.wavelength_m", cv.wavelength);
    cv.offset_min = get(s, "offset_min_tau", cv.offset_min);
    cv.offset_max = get(s, "offset_max_tau", cv.offset_max);
    in_range("mode_converter.offset_max_tau", cv.offset_max, cv.offset_min, 10.0);
    in_range("mode_converter.offset_min_tau", cv.offset_min, -10.0, cv.offset_max);
    cv.n_offsets = get(s, "n_offsets", cv.n_offsets);
    if (cv.n_offsets < 1) config_error("field 'mode_converter.n_offsets' must be >= 1");
    cv.q_min = get(s, "q_min", cv.q_min);
    cv.q_max = get(s, "q_max", cv.q_max);
    positive("mode_converter.q_min", cv.q_min);
    in_range("mode_converter.q_max", cv.q_max, cv.q_min, 1e15);
    cv.n_q = get(s, "n_q", cv.n_q);
    if (cv.n_q < 1) config_error("field 'mode_converter.n_q' must be >= 1");
    cv.integ.rel_tol = get(s, "rel_tol", cv.integ.rel_tol);
    in_range("mode_converter.rel_tol", cv.integ.rel_tol, 1e-14, 1e-3);
  }
  {
    const json& s = section(doc, "link");
    auto& b = c.link.budget;
    b.atmospheric_total = get(s, "atmospheric_total_db", b.atmospheric_total);
    b.adaptive_optics = get(s, "adaptive_optics_db", b.adaptive_optics);
    b.mode_converter = get(s, "mode_converter_db", b.mode_converter);
    b.cavity = get(s, "cavity_db", b.cavity);
    b.switch_array = get(s, "switch_array_db", b.switch_array);
    b.detector = get(s, "detector_db", b.detector);
    b.switch_model = get<std::string>(s, "switch_model", "fixed") == "fixed"
                         ? link::SwitchModel::kFixed
                         : link::SwitchModel::kMziTree;
    b.loss_per_mzi = get(s, "loss_per_mzi_db", b.loss_per_mzi);
    module_check("link", [&] { b.validate(); });
    c.link.atm_values = get_list<double>(s, "atmospheric_values", {b.atmospheric_total});
    c.link.fiber_values = get_list<double>(s, "fiber_values", {50.0, 60.0, 70.0, 80.0});
    for (double v : c.link.atm_values) in_range("link.atmospheric_values", v, 0.0, 400.0);
    for (double v : c.link.fiber_values) in_range("link.fiber_values", v, 0.0, 400.0);
    c.link.l_gg_km = get(s, "l_gg_km", c.link.l_gg_km);
    positive("link.l_gg_km", c.link.l_gg_km);
    c.link.eta_min = get(s, "eta_min", c.link.eta_min);
    c.link.eta_max = get(s, "eta_max", c.link.eta_max);
    in_range("link.eta_min", c.link.eta_min, 1e-300, 1.0);
    in_range("link.eta_max", c.link.eta_max, c.link.eta_min, 0.998);
    c.link.n_eta = get(s, "n_eta", c.link.n_eta);
    if (c.link.n_eta < 2) config_error("field 'link.n_eta' must be >= 2");
  }
  {
    const json& s = section(doc, "repeater");
    auto& r = c.rep;
    auto& p = r.base;
    p.k = get<std::int64_t>(s, "k", p.k);
    p.tau_comm = get(s, "tau_comm_s", p.tau_comm);
    p.tau_reset = get(s, "tau_reset_s", p.tau_reset);
    if (s.contains("epsilon")) p.epsilon = opt_real(s, "epsilon");
    p.policy = get<std::string>(s, "policy", "continuous") == "continuous"
                   ? link::AttemptPolicy::kContinuous
                   : link::AttemptPolicy::kFloorAtOne;
    p.p_lost = opt_real(s, "p_lost");
    r.xi_zalm = opt_real(s, "xi_zalm");
    r.xi_spdc = opt_real(s, "xi_spdc");
    r.tau0_zalm = opt_real(s, "tau0_zalm_s");
    r.tau0_spdc = opt_real(s, "tau0_spdc_s");
    r.f_zalm = opt_real(s, "f_tele_zalm");
    r.f_spdc = opt_real(s, "f_tele_spdc");
    if (r.xi_zalm) in_range("repeater.xi_zalm", *r.xi_zalm, 0.0, 1.0);
    if (r.xi_spdc) in_range("repeater.xi_spdc", *r.xi_spdc, 0.0, 1.0);
    if (r.tau0_zalm) positive("repeater.tau0_zalm_s", *r.tau0_zalm);
    if (r.tau0_spdc) positive("repeater.tau0_spdc_s", *r.tau0_spdc);
    if (r.f_zalm) in_range("repeater.f_tele_zalm", *r.f_zalm, 0.25, 1.0);
    if (r.f_spdc) in_range("repeater.f_tele_spdc", *r.f_spdc, 0.25, 1.0);
    module_check("repeater", [&] { p.validate(); });
    r.k_values = get_list<std::int64_t>(s, "k_values", {p.k});
    for (auto k : r.k_values) {
      if (k < 2) config_error("field 'repeater.k_values' entries must be >= 2");
    }
    r.k_min = get<std::int64_t>(s, "k_min", r.k_min);
    r.k_max = get<std::int64_t>(s, "k_max", r.k_max);
    if (r.k_min < 2 || r.k_max < r.k_min) config_error("fields 'repeater.k_min/k_max' need 2 <= k_min <= k_max");
    r.k_per_decade = get(s, "k_per_decade", r.k_per_decade);
    if (r.k_per_decade < 1) config_error("field 'repeater.k_per_decade' must be >= 1");
    r.tau_comm_values = get_list<double>(s, "tau_comm_values", {p.tau_comm});
    for (double t : r.tau_comm_values) positive("repeater.tau_comm_values", t);
    r.epsilons = get_list<double>(s, "epsilons", {});
    for (double e : r.epsilons) in_range("repeater.epsilons", e, 0.0, 0.749);
    r.eps_min = get(s, "eps_min", r.eps_min);
    r.eps_max = get(s, "eps_max", r.eps_max);
    positive("repeater.eps_min", r.eps_min);
    in_range("repeater.eps_max", r.eps_max, r.eps_min, 0.749);
    r.n_eps = get(s, "n_eps", r.n_eps);
    if (r.n_eps < 1) config_error("field 'repeater.n_eps' must be >= 1");
    r.des_windows = get<std::int64_t>(s, "des_windows", r.des_windows);
    if (r.des_windows < 0) config_error("field 'repeater.des_windows' must be >= 0");
  }
  return c;
}

// -------------------------------------------------------- derived source

struct Derived {
  double p_gen = 0.0;
  double p_zalm = 0.0;
  double emission_rate = 0.0;
  double f_zalm = 0.0;
  double xi_zalm = 0.0;
  source::FreeRunningResult fr;
  double xi_spdc = 0.0;
};

source::DetectorBank detectors(const SourceCfg& s) {
  return source::uniform_detectors(s.fid.detector_efficiency, s.fid.detector_dark_prob);
}

double derive_p_gen(const SourceCfg& s) {
  const auto patterns = s.all_patterns ? source::accepted_patterns()
                                       : std::vector<source::ClickTuple>{source::kReferencePattern};
  return source::p_gen(s.spdc, detectors(s), patterns, s.fid.cutoff);
}

Derived derive(const Config& c, bool need_spdc) {
  Derived d;
  const auto& s = c.source;
  d.p_gen = derive_p_gen(s);
  d.p_zalm = source::p_zalm(d.p_gen, s.n_modes);
  d.emission_rate = source::emission_rate(s.spdc, d.p_zalm);
  d.f_zalm = source::zalm_fidelity(s.spdc.mean_photon_number, s.fid).fidelity;
  const auto analyzed = source::apply_bsa(source::build_source_pure(s.spdc, s.fid.cutoff));
  const auto rec = source::herald(analyzed, detectors(s), source::kReferencePattern, s.fid.visibility);
  d.xi_zalm = rec.heralded_state ? source::both_receive_probability(*rec.heralded_state) : 0.0;
  if (need_spdc) {
    d.fr = source::free_running_spdc(s.spdc, s.filter_bw, s.fid, s.target_fidelity);
    if (!d.fr.found) {
      throw Error(ErrorKind::kDomain, "free-running source cannot reach the target fidelity");
    }
    d.xi_spdc = source::both_receive_probability(
        source::free_running_state(d.fr.ns_required, s.fid.cutoff));
  }
  return d;
}

struct Sources {
  link::SourceModel zalm;
  link::SourceModel spdc;
};

Sources source_models(const Config& c) {
  const auto& r = c.rep;
  const bool need_derive = !(r.xi_zalm && r.tau0_zalm && r.f_zalm);
  const bool need_spdc = !(r.xi_spdc && r.tau0_spdc && r.f_spdc);
  Derived d;
  if (need_derive || need_spdc) d = derive(c, need_spdc);
  Sources out;
  out.zalm = {"zalm", r.tau0_zalm.value_or(need_derive ? 1.0 / d.emission_rate : 0.0),
              r.xi_zalm.value_or(d.xi_zalm), r.f_zalm.value_or(d.f_zalm)};
  out.spdc = {"spdc", r.tau0_spdc.value_or(need_spdc ? 1.0 / d.fr.rate : 0.0),
              r.xi_spdc.value_or(d.xi_spdc), r.f_spdc.value_or(c.source.target_fidelity)};
  if (!r.tau0_zalm) out.zalm.tau0 = 1.0 / d.emission_rate;
  if (!r.xi_zalm) out.zalm.xi = d.xi_zalm;
  if (!r.f_zalm) out.zalm.f_tele = d.f_zalm;
  return out;
}

link::RepeaterParams with_source(link::RepeaterParams p, const link::SourceModel& s) {
  p.tau0 = s.tau0;
  p.xi = s.xi;
  p.f_tele = s.f_tele;
  return p;
}

// Channel for a directly specified eta, keeping the budget's after-spin
// split.
link::Channel channel_for_eta(double eta, const link::LinkBudget& b) {
  link::Channel ch;
  ch.sqrt_eta = std::sqrt(eta);
  const double after = std::pow(10.0, -b.post_spin_db() / 10.0);
  const double before = std::min(1.0, ch.sqrt_eta / after);
  ch.p_lost = 1.0 - before;
  ch.p_e = before - ch.sqrt_eta;
  return ch;
}

// ------------------------------------------------------------------ output

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

class Output {
 public:
  Output(std::string dir, const Scenario& s, std::string target)
      : dir_(std::move(dir)), scenario_(s), target_(std::move(target)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorKind::kIo, "cannot create output directory '" + dir_ + "': " + ec.message());
  }

  void csv(const std::string& file, const std::vector<std::string>& header,
           const std::vector<std::vector<double>>& rows) {
    const std::string path = (fs::path(dir_) / file).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path + "'");
    out << "# scenario=" << scenario_.name << " target=" << target_
        << " hash=" << hex64(scenario_.hash) << " seed=" << scenario_.seed << "\n";
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << fmt(row[i]);
      out << "\n";
    }
    if (!out) throw Error(ErrorKind::kIo, "write failed for '" + path + "'");
    files_.push_back(path);
  }

  const std::string& dir() const { return dir_; }
  std::vector<std::string>& files() { return files_; }

 private:
  std::string dir_;
  const Scenario& scenario_;
  std::string target_;
  std::vector<std::string> files_;
};

// ----------------------------------------------------------------- targets

void run_fig3(const Config& c, Output& out, unsigned jobs) {
  const auto& s = c.source;
  const auto ns = log_grid(s.ns_min, s.ns_max, s.n_points);
  auto cond = s.fid;
  cond.dark_model = spin::DarkModel::kConditional;
  std::vector<std::vector<double>> rows(ns.size());
  parallel_for(ns.size(), [&](std::size_t i) {
    rows[i] = {ns[i], source::zalm_fidelity(ns[i], s.fid).fidelity,
               source::free_running_fidelity(ns[i], s.fid).fidelity,
               source::free_running_fidelity(ns[i], cond).fidelity};
  }, jobs);
  out.csv("fig3.csv", {"mean_photon_number", "fidelity_zalm", "fidelity_free_running",
                       "fidelity_free_running_conditional"}, rows);
}

void run_fig5a(const Config& c, Output& out) {
  const auto src = source_models(c);
  auto p = with_source(c.rep.base, src.zalm);
  const auto etas = log_grid(c.link.eta_min, c.link.eta_max, c.link.n_eta);
  std::vector<std::string> header{"eta"};
  for (auto k : c.rep.k_values) {
    header.push_back("normalized_rate_k" + std::to_string(k));
    header.push_back("rate_k" + std::to_string(k) + "_hz");
  }
  std::vector<std::vector<double>> rows;
  for (double eta : etas) {
    std::vector<double> row{eta};
    const auto ch = channel_for_eta(eta, c.link.budget);
    for (auto k : c.rep.k_values) {
      p.k = k;
      const double r = link::entanglement_rate(p, ch).rate;
      row.push_back(r * p.tau_idle() / static_cast<double>(k - 1));
      row.push_back(r);
    }
    rows.push_back(std::move(row));
  }
  out.csv("fig5a.csv", header, rows);
}

std::vector<double> epsilon_list(const RepeaterCfg& r) {
  if (!r.epsilons.empty()) return r.epsilons;
  if (r.base.epsilon) return {*r.base.epsilon};
  return {};
}

// Shared by the satellite curves with fixed and MZI-tree switches.
void run_k_curves(const Config& c, Output& out, const std::string& prefix, unsigned jobs) {
  const auto src = source_models(c);
  const auto ks = link::log_k_grid(c.rep.k_min, c.rep.k_max, c.rep.k_per_decade);
  auto eps = epsilon_list(c.rep);
  const bool no_budget = eps.empty();
  if (no_budget) eps.push_back(-1.0);
  std::vector<std::vector<double>> asym;
  for (double atm : c.link.atm_values) {
    auto b = c.link.budget;
    b.atmospheric_total = atm;
    if (b.switch_model == link::SwitchModel::kFixed) {
      const double s = b.sqrt_eta(2);
      asym.push_back({atm, s, link::rate_asymptote(s, src.zalm.tau0),
                      link::rate_asymptote(s, src.spdc.tau0)});
    }
    for (double tc : c.rep.tau_comm_values) {
      for (double e : eps) {
        auto p = c.rep.base;
        p.tau_comm = tc;
        if (no_budget) p.epsilon.reset(); else p.epsilon = e;
        const auto pts = link::rate_vs_k(p, b, src.zalm, src.spdc, ks, static_cast<int>(jobs));
        std::vector<std::vector<double>> rows;
        for (const auto& pt : pts) rows.push_back({static_cast<double>(pt.k), pt.zalm, pt.spdc});
        const std::string name = prefix + "_tcomm" + label(tc * 1e3) + "ms_atm" + label(atm) + "db" +
                                 (no_budget ? std::string("_nobudget") : "_eps" + label(e)) + ".csv";
        out.csv(name, {"k", "rate_zalm_hz", "rate_spdc_hz"}, rows);
      }
    }
  }
  if (!asym.empty()) {
    out.csv(prefix + "_asymptotes.csv",
            {"atmospheric_total_db", "sqrt_eta", "asymptote_zalm_hz", "asymptote_spdc_hz"}, asym);
  }
}

void run_fig6(const Config& c, Output& out) {
  const auto src = source_models(c);
  const double p_gen = derive_p_gen(c.source);
  auto p = with_source(c.rep.base, src.zalm);
  std::vector<std::string> header{"n_modes", "p_zalm"};
  for (auto k : c.rep.k_values) header.push_back("rate_k" + std::to_string(k) + "_hz");
  std::vector<std::vector<double>> rows(c.source.n_modes_values.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i] = {static_cast<double>(c.source.n_modes_values[i]),
               source::p_zalm(p_gen, c.source.n_modes_values[i])};
  }
  for (auto k : c.rep.k_values) {
    p.k = k;
    const auto pts = link::rate_vs_modes(p, c.link.budget, p_gen, c.source.spdc.rep_rate,
                                         c.source.n_modes_values);
    for (std::size_t i = 0; i < pts.size(); ++i) rows[i].push_back(pts[i].rate);
  }
  out.csv("fig6.csv", header, rows);
}

struct SpectralGoldens {
  spectral::SpectralSummary at_length;
  spectral::VisibilityOptimum optimum;
};

SpectralGoldens spectral_goldens(const Config& c) {
  SpectralGoldens g;
  g.at_length = spectral::summarize(spectral::reference_jsa(c.spectral));
  g.optimum = spectral::max_visibility(c.spectral);
  return g;
}

void run_figS3(const Config& c, Output& out, unsigned jobs) {
  const auto g = spectral_goldens(c);
  out.csv("figS3_summary.csv",
          {"crystal_length_m", "entropy_bits", "visibility", "purity", "schmidt_number",
           "pass_probability", "optimum_length_m", "optimum_visibility", "optimum_entropy_bits",
           "f_swap_at_optimum"},
          {{c.spectral.crystal_length, g.at_length.entropy, g.at_length.visibility,
            g.at_length.purity, g.at_length.schmidt_number, g.at_length.pass_probability,
            g.optimum.crystal_length, g.optimum.visibility, g.optimum.entropy,
            (1.0 + g.optimum.visibility) / 2.0}});
  const auto lengths = log_grid(c.length_min, c.length_max, c.n_lengths);
  std::vector<std::vector<double>> rows(lengths.size());
  parallel_for(lengths.size(), [&](std::size_t i) {
    auto cfg = c.spectral;
    cfg.crystal_length = lengths[i];
    const auto s = spectral::summarize(spectral::reference_jsa(cfg));
    rows[i] = {lengths[i], s.entropy, s.visibility};
  }, jobs);
  out.csv("figS3_length_scan.csv", {"crystal_length_m", "entropy_bits", "visibility"}, rows);
  if (c.write_jsa) {
    const auto path = (fs::path(out.dir()) / "figS3_jsa.txt").string();
    spectral::write_jsa(spectral::reference_jsa(c.spectral), path);
    out.files().push_back(path);
  }
}

void run_figS5(const Config& c, Output& out, unsigned jobs) {
  const auto& cv = c.conv;
  const auto control = converter::synthesize_control(cv.pulse, cv.cavity);
  const auto trace = converter::integrate_cavity(cv.pulse, cv.cavity, control, cv.integ);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < trace.t.size(); ++i) {
    const double t = trace.t[i];
    rows.push_back({t, cv.pulse(t), std::abs(trace.xi_a_out[i]), std::abs(trace.xi_b_out[i]),
                    control.magnitude(t) / cv.pulse.spectral_width()});
  }
  out.csv("figS5_reference_trace.csv",
          {"t_s", "xi_in", "abs_xi_a_out", "abs_xi_b_out", "control_over_omega_g"}, rows);
  out.csv("figS5_reference_summary.csv",
          {"efficiency", "reflected", "loss_a", "loss_b", "residual", "ledger_error"},
          {{trace.p_b_out, trace.p_a_out, trace.loss_a, trace.loss_b, trace.residual,
            trace.ledger_error()}});

  auto offsets = lin_grid(cv.offset_min, cv.offset_max, cv.n_offsets);
  for (double& o : offsets) o *= cv.pulse.fwhm;
  const auto timing = converter::sweep_conversion(cv.pulse, cv.cavity,
                                                  converter::SweepAxis::kTimingOffset,
                                                  offsets, cv.integ, jobs);
  rows.clear();
  for (const auto& pt : timing) rows.push_back({pt.axis_value, pt.efficiency, pt.ledger_error});
  out.csv("figS5_timing.csv", {"timing_offset_s", "efficiency", "ledger_error"}, rows);

  const auto qs = log_grid(cv.q_min, cv.q_max, cv.n_q);
  std::vector<double> kappas;
  for (double q : qs) kappas.push_back(converter::kappa_from_q(q, cv.wavelength));
  const auto loss = converter::sweep_conversion(cv.pulse, cv.cavity,
                                                converter::SweepAxis::kIntrinsicLoss,
                                                kappas, cv.integ, jobs);
  rows.clear();
  for (std::size_t i = 0; i < loss.size(); ++i) {
    rows.push_back({qs[i], loss[i].axis_value, loss[i].efficiency, loss[i].ledger_error});
  }
  out.csv("figS5_loss.csv", {"q_intrinsic", "kappa_l_rad_per_s", "efficiency", "ledger_error"}, rows);
}

std::vector<double> tradeoff_epsilons(const RepeaterCfg& r) {
  std::vector<double> eps{0.0};
  for (double e : log_grid(r.eps_min, r.eps_max, r.n_eps)) eps.push_back(e);
  return eps;
}

void run_figS6(const Config& c, Output& out) {
  const auto src = source_models(c);
  const auto p = with_source(c.rep.base, src.zalm);
  const auto curves = link::rate_fidelity_tradeoff(c.rep.k_values, p, c.link.budget,
                                                   tradeoff_epsilons(c.rep));
  for (const auto& cu : curves) {
    std::vector<std::vector<double>> rows;
    for (const auto& pt : cu.points) {
      rows.push_back({pt.epsilon,
                      pt.n_max == link::kNoLimit ? -1.0 : static_cast<double>(pt.n_max),
                      pt.fidelity, pt.rate});
    }
    out.csv("figS6_k" + std::to_string(cu.k) + ".csv",
            {"epsilon", "n_max", "fidelity", "rate_hz"}, rows);
  }
}

void run_figS7(const Config& c, Output& out) {
  const auto src = source_models(c);
  const auto ks = link::log_k_grid(c.rep.k_min, c.rep.k_max, c.rep.k_per_decade);
  const auto curves = link::ground_only_scenario(c.link.l_gg_km, c.link.fiber_values,
                                                 c.rep.base, src.zalm, src.spdc, ks);
  for (const auto& cu : curves) {
    std::vector<std::vector<double>> rows;
    for (const auto& pt : cu.points) {
      rows.push_back({static_cast<double>(pt.k), pt.zalm, pt.spdc, pt.zalm / pt.spdc});
    }
    out.csv("figS7_fiber" + label(cu.fiber_total_db) + "db.csv",
            {"k", "rate_zalm_hz", "rate_spdc_hz", "ratio"}, rows);
  }
}

// ----------------------------------------------------------------- goldens

std::string data_dir() {
  if (const char* env = std::getenv("ZALM_DATA_DIR")) return env;
#ifdef ZALM_DEFAULT_DATA_DIR
  return ZALM_DEFAULT_DATA_DIR;
#else
  return "data";
#endif
}

std::vector<Check> run_goldens(const Config& c, Output& out, ToleranceProfile profile) {
  const std::string path = (fs::path(data_dir()) / "goldens.json").string();
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open goldens file '" + path + "'");
  json g;
  try {
    in >> g;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kIo, "malformed goldens file: " + std::string(e.what()));
  }
  const std::string prof = profile == ToleranceProfile::kStrict ? "strict" : "paper";
  if (!g.contains(prof)) throw Error(ErrorKind::kIo, "goldens file lacks profile '" + prof + "'");

  const auto& s = c.source;
  const double p_gen = derive_p_gen(s);
  const double p_zalm = source::p_zalm(p_gen, s.n_modes);
  const auto spec = spectral_goldens(c);
  std::map<std::string, double> values = {
      {"p_gen", p_gen},
      {"p_zalm", p_zalm},
      {"emission_rate_hz", source::emission_rate(s.spdc, p_zalm)},
      {"visibility", spec.optimum.visibility},
      {"f_swap", (1.0 + spec.optimum.visibility) / 2.0},
      {"schmidt_entropy_bits", spec.at_length.entropy},
      {"fidelity_zalm", source::zalm_fidelity(s.spdc.mean_photon_number, s.fid).fidelity},
      {"pileup_p_multi", source::detector_pileup(s.spdc, s.pileup_reset, s.pileup_rate).p_multi},
  };
  std::vector<Check> checks;
  for (const auto& [name, spec_entry] : g[prof].items()) {
    auto it = values.find(name);
    if (it == values.end()) throw Error(ErrorKind::kIo, "goldens file names unknown quantity '" + name + "'");
    Check ch;
    ch.name = name;
    ch.value = it->second;
    ch.expected = spec_entry.at("value").get<double>();
    ch.tolerance = spec_entry.at("tolerance").get<double>();
    ch.relative = spec_entry.value("relative", true);
    const double err = ch.relative ? std::abs(ch.value / ch.expected - 1.0)
                                   : std::abs(ch.value - ch.expected);
    ch.pass = err <= ch.tolerance;
    checks.push_back(ch);
  }
  const std::string csv_path = (fs::path(out.dir()) / ("table_goldens_" + prof + ".csv")).string();
  std::ofstream f(csv_path, std::ios::binary);
  if (!f) throw Error(ErrorKind::kIo, "cannot write '" + csv_path + "'");
  f << "quantity,value,expected,tolerance,relative,pass\n";
  for (const auto& ch : checks) {
    f << ch.name << "," << fmt(ch.value) << "," << fmt(ch.expected) << "," << fmt(ch.tolerance)
      << "," << (ch.relative ? 1 : 0) << "," << (ch.pass ? 1 : 0) << "\n";
  }
  out.files().push_back(csv_path);
  return checks;
}

void write_manifest(const RunReport& rep, const Scenario& s, const std::string& dir,
                    ToleranceProfile profile) {
  json m;
  m["target"] = rep.target;
  m["scenario"] = s.name;
  m["origin"] = s.origin;
  m["hash"] = hex64(s.hash);
  m["seed"] = s.seed;
  m["inputs"] = json::parse(s.canonical);
  m["version"] = {{"zalmsim", kVersion}, {"compiler", __VERSION__}};
  m["tolerance_profile"] = profile == ToleranceProfile::kStrict ? "strict" : "paper";
  m["files"] = rep.files;
  json checks = json::array();
  for (const auto& c : rep.checks) {
    checks.push_back({{"name", c.name}, {"value", c.value}, {"expected", c.expected},
                      {"tolerance", c.tolerance}, {"relative", c.relative}, {"pass", c.pass}});
  }
  m["checks"] = checks;
  m["wall_time_s"] = rep.wall_seconds;
  const auto path = (fs::path(dir) / (rep.target + "_manifest.json")).string();
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path + "'");
  out << m.dump(2) << "\n";
}

// ------------------------------------------------------------------- sweep

struct SweepSpec {
  std::string section, key;
  std::vector<double> values;
  std::string output;
};

SweepSpec sweep_spec(const json& doc, const std::string& name) {
  const json& sw = section(doc, "sweep");
  if (sw.empty()) config_error("scenario has no [sweep] section");
  if (!sw.contains("axis")) config_error("field 'sweep.axis' is required");
  std::string axis = sw["axis"].is_array() ? sw["axis"][0].get<std::string>() : sw["axis"].get<std::string>();
  const auto dot = axis.find('.');
  if (dot == std::string::npos) config_error("field 'sweep.axis' must read <section>.<key>");
  SweepSpec sp;
  sp.section = axis.substr(0, dot);
  sp.key = axis.substr(dot + 1);
  static const std::set<std::string> supported = {
      "source.mean_photon_number", "spectral.crystal_length_m",
      "mode_converter.timing_offset_s", "mode_converter.kappa_l_rad_per_s",
      "spin.cooperativity", "link.atmospheric_total_db", "repeater.k",
      "repeater.epsilon"};
  if (!supported.count(axis)) config_error("field 'sweep.axis': unsupported axis '" + axis + "'");
  const bool has_values = sw.contains("values");
  const bool has_range = sw.contains("start") || sw.contains("stop") || sw.contains("n_points");
  if (has_values == has_range) config_error("section 'sweep' needs either 'values' or start/stop/n_points");
  if (has_values) {
    sp.values = sw["values"].get<std::vector<double>>();
  } else {
    if (!sw.contains("start") || !sw.contains("stop") || !sw.contains("n_points"))
      config_error("section 'sweep' range needs start, stop and n_points");
    const double a = sw["start"].get<double>(), b = sw["stop"].get<double>();
    const int n = sw["n_points"].get<int>();
    if (n < 1) config_error("field 'sweep.n_points' must be >= 1");
    const bool log = sw.value("spacing", std::string("linear")) == "log";
    if (log && !(a > 0.0 && b > 0.0)) config_error("log sweep needs positive start and stop");
    sp.values = log ? log_grid(a, b, n) : lin_grid(a, b, n);
  }
  if (sp.values.empty()) config_error("sweep has no points");
  if (axis == "repeater.k") {
    for (double& v : sp.values) v = std::round(v);
  }
  sp.output = sw.value("output", name + "_sweep.csv");
  return sp;
}

std::vector<double> evaluate_sweep_point(const json& base, const SweepSpec& sp, double v,
                                         std::uint64_t seed) {
  json doc = base;
  doc.erase("sweep");
  const std::string axis = sp.section + "." + sp.key;
  if (axis == "mode_converter.timing_offset_s" || axis == "mode_converter.kappa_l_rad_per_s") {
    const Config c = build_config(doc);
    auto pulse = c.conv.pulse;
    auto cav = c.conv.cavity;
    if (axis == "mode_converter.timing_offset_s") {
      pulse.offset = v;
    } else {
      if (!(v >= 0.0)) config_error("sweep value for kappa_l must be >= 0");
      cav.kappa_a_l = cav.kappa_b_l = v;
    }
    const auto control = converter::synthesize_control(pulse, cav);
    const auto tr = converter::integrate_cavity(pulse, cav, control, c.conv.integ);
    return {v, tr.p_b_out, tr.ledger_error()};
  }
  if (axis == "repeater.k") {
    doc["repeater"]["k"] = static_cast<std::int64_t>(v);
  } else {
    doc[sp.section][sp.key] = v;
  }
  Config c;
  try {
    validate_schema(doc);
    c = build_config(doc);
  } catch (const Error& e) {
    config_error("sweep value " + fmt(v) + ": " + e.what());
  }
  if (sp.section == "source" || sp.section == "spin") {
    const auto& s = c.source;
    const double p_gen = derive_p_gen(s);
    return {v, p_gen, source::p_zalm(p_gen, s.n_modes),
            source::zalm_fidelity(s.spdc.mean_photon_number, s.fid).fidelity,
            source::free_running_fidelity(s.spdc.mean_photon_number, s.fid).fidelity};
  }
  if (sp.section == "spectral") {
    const auto s = spectral::summarize(spectral::reference_jsa(c.spectral));
    return {v, s.entropy, s.visibility};
  }
  const auto src = source_models(c);
  if (axis == "link.atmospheric_total_db") {
    const double z = link::entanglement_rate(with_source(c.rep.base, src.zalm), c.link.budget).rate;
    const double s = link::entanglement_rate(with_source(c.rep.base, src.spdc), c.link.budget).rate;
    return {v, c.link.budget.sqrt_eta(c.rep.base.k), z, s};
  }
  if (axis == "repeater.epsilon") {
    const auto p = with_source(c.rep.base, src.zalm);
    const auto curves = link::rate_fidelity_tradeoff({p.k}, p, c.link.budget, {v});
    const auto& pt = curves[0].points[0];
    return {v, pt.n_max == link::kNoLimit ? -1.0 : static_cast<double>(pt.n_max), pt.fidelity, pt.rate};
  }
  // repeater.k
  const auto pz = with_source(c.rep.base, src.zalm);
  const auto ps = with_source(c.rep.base, src.spdc);
  std::vector<double> row{v, link::entanglement_rate(pz, c.link.budget).rate,
                          link::entanglement_rate(ps, c.link.budget).rate};
  // The oracle needs whole rotation cycles; points with k above the window
  // budget are left as nan rather than silently truncated.
  if (c.rep.des_windows > 0) {
    if (pz.k > c.rep.des_windows) {
      row.push_back(std::nan(""));
      row.push_back(std::nan(""));
    } else {
      const double cycle = pz.tau_idle() * static_cast<double>(pz.k) / static_cast<double>(pz.k - 1);
      link::DesOptions o;
      o.horizon = (static_cast<double>(c.rep.des_windows) + 0.5) / static_cast<double>(pz.k) * cycle;
      o.seed = seed;
      const auto d = link::des_oracle(pz, c.link.budget.channel(pz.k), o);
      row.push_back(d.rate);
      row.push_back(d.stderr_rate);
    }
  }
  return row;
}

std::vector<std::string> sweep_header(const SweepSpec& sp, const json& doc) {
  const std::string axis = sp.section + "." + sp.key;
  if (sp.section == "source" || sp.section == "spin")
    return {sp.key, "p_gen", "p_zalm", "fidelity_zalm", "fidelity_free_running"};
  if (sp.section == "spectral") return {"crystal_length_m", "entropy_bits", "visibility"};
  if (axis == "mode_converter.timing_offset_s") return {"timing_offset_s", "efficiency", "ledger_error"};
  if (axis == "mode_converter.kappa_l_rad_per_s") return {"kappa_l_rad_per_s", "efficiency", "ledger_error"};
  if (axis == "link.atmospheric_total_db") return {"atmospheric_total_db", "sqrt_eta", "rate_zalm_hz", "rate_spdc_hz"};
  if (axis == "repeater.epsilon") return {"epsilon", "n_max", "fidelity", "rate_hz"};
  std::vector<std::string> h{"k", "rate_zalm_hz", "rate_spdc_hz"};
  if (section(section(doc, "repeater"), "des_windows").is_number_integer() &&
      section(doc, "repeater")["des_windows"].get<std::int64_t>() > 0) {
    h.push_back("des_rate_zalm_hz");
    h.push_back("des_stderr_hz");
  }
  return h;
}

}  // namespace

// ------------------------------------------------------------------ public

const std::vector<std::string>& target_names() {
  static const std::vector<std::string> names = {
      "fig3", "fig5a", "fig5b", "fig6", "figS3", "figS5", "figS6", "figS7", "figS8", "table_goldens"};
  return names;
}

std::optional<Target> parse_target(std::string_view name) {
  const auto& n = target_names();
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] == name) return static_cast<Target>(i);
  }
  return std::nullopt;
}

const char* target_name(Target t) { return target_names()[static_cast<std::size_t>(t)].c_str(); }

std::optional<ToleranceProfile> parse_profile(std::string_view name) {
  if (name == "strict") return ToleranceProfile::kStrict;
  if (name == "paper") return ToleranceProfile::kPaper;
  return std::nullopt;
}

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

bool RunReport::checks_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    config_error(origin + ": malformed JSON: " + e.what());
  }
  try {
    validate_schema(doc);
    build_config(doc);
    if (doc.contains("sweep")) sweep_spec(doc, "check");
  } catch (const Error& e) {
    config_error(origin + ": " + e.what());
  }
  Scenario s;
  s.origin = origin;
  s.name = doc.value("name", fs::path(origin).stem().string());
  s.seed = doc.value("seed", std::uint64_t{1});
  s.output_dir = doc.value("output_dir", std::string());
  s.canonical = doc.dump();
  s.hash = fnv1a(s.canonical + "#seed=" + std::to_string(s.seed));
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kConfig, "cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

std::string default_scenario_dir() {
  if (const char* env = std::getenv("ZALM_SCENARIO_DIR")) return env;
#ifdef ZALM_DEFAULT_SCENARIO_DIR
  return ZALM_DEFAULT_SCENARIO_DIR;
#else
  return "scenarios";
#endif
}

std::string resolve_output_dir(const Scenario& s, const RunOptions& opts) {
  if (!opts.output_dir.empty()) return opts.output_dir;
  if (!s.output_dir.empty()) return s.output_dir;
  if (const char* env = std::getenv("ZALM_OUTPUT_DIR")) return env;
  return "zalm_out";
}

RunReport run_reproduction(Target target, const RunOptions& opts) {
  const std::string dir = opts.scenario_dir.empty() ? default_scenario_dir() : opts.scenario_dir;
  const auto path = (fs::path(dir) / (std::string(target_name(target)) + ".json")).string();
  if (!fs::exists(path)) {
    throw Error(ErrorKind::kConfig, "no bundled scenario for target '" +
                                        std::string(target_name(target)) + "' at " + path);
  }
  return run_scenario_target(load_scenario(path), target, opts);
}

RunReport run_scenario_target(const Scenario& s_in, Target target, const RunOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  Scenario s = s_in;
  if (opts.seed) {
    s.seed = *opts.seed;
    s.hash = fnv1a(s.canonical + "#seed=" + std::to_string(s.seed));
  }
  const json doc = json::parse(s.canonical);
  const Config c = build_config(doc);
  RunReport rep;
  rep.target = target_name(target);
  rep.scenario = s.name;
  rep.hash = s.hash;
  rep.seed = s.seed;
  rep.output_dir = resolve_output_dir(s, opts);
  Output out(rep.output_dir, s, rep.target);
  switch (target) {
    case Target::kFig3: run_fig3(c, out, opts.jobs); break;
    case Target::kFig5a: run_fig5a(c, out); break;
    case Target::kFig5b: run_k_curves(c, out, "fig5b", opts.jobs); break;
    case Target::kFig6: run_fig6(c, out); break;
    case Target::kFigS3: run_figS3(c, out, opts.jobs); break;
    case Target::kFigS5: run_figS5(c, out, opts.jobs); break;
    case Target::kFigS6: run_figS6(c, out); break;
    case Target::kFigS7: run_figS7(c, out); break;
    case Target::kFigS8: run_k_curves(c, out, "figS8", opts.jobs); break;
    case Target::kTableGoldens: rep.checks = run_goldens(c, out, opts.profile); break;
  }
  rep.files = out.files();
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(rep, s, rep.output_dir, opts.profile);
  return rep;
}

RunReport run_sweep(const Scenario& s_in, const RunOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  Scenario s = s_in;
  if (opts.seed) {
    s.seed = *opts.seed;
    s.hash = fnv1a(s.canonical + "#seed=" + std::to_string(s.seed));
  }
  const json doc = json::parse(s.canonical);
  const auto sp = sweep_spec(doc, s.name);
  std::vector<std::vector<double>> rows(sp.values.size());
  parallel_for(sp.values.size(), [&](std::size_t i) {
    rows[i] = evaluate_sweep_point(doc, sp, sp.values[i], s.seed + i);
  }, opts.jobs);
  RunReport rep;
  rep.target = "sweep";
  rep.scenario = s.name;
  rep.hash = s.hash;
  rep.seed = s.seed;
  rep.output_dir = resolve_output_dir(s, opts);
  Output out(rep.output_dir, s, "sweep");
  out.csv(sp.output, sweep_header(sp, doc), rows);
  rep.files = out.files();
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(rep, s, rep.output_dir, opts.profile);
  return rep;
}

}  // namespace zalm::scenario
