#pragma once

// INI run configuration. Two sections, [physical] and [run]; unknown
// sections or keys are errors. Physical values take an optional unit
// suffix with an SI prefix (p n u m k M G), e.g. "150 ng", "2 mW", "1 MHz".
// Rates: "Hz" means cycles per second (multiplied by 2 pi), "rad/s" is
// angular; a bare number follows frequency_convention.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "cascopt/errors.hpp"
#include "cascopt/meanfield.hpp"
#include "cascopt/observables.hpp"
#include "cascopt/ode.hpp"
#include "cascopt/params.hpp"
#include "cascopt/spectra.hpp"

namespace cascopt {

enum class FrequencyConvention { angular, ordinary };

inline const char* to_string(FrequencyConvention f) {
  return f == FrequencyConvention::angular ? "angular" : "ordinary";
}

struct RunConfig {
  PhysicalParams physical;
  FrequencyConvention frequency_convention = FrequencyConvention::angular;

  OpticalNoise optical_noise = OpticalNoise::vacuum_half;
  CubicKappaConvention cubic_kappa = CubicKappaConvention::printed;
  Mirror2Form mirror2_spectrum = Mirror2Form::derived;
  ReadoutForm readout_form = ReadoutForm::derived;
  EnergyOffset energy_offset = EnergyOffset::plus_half;

  double horizon = 50.0;  // units of tau
  int samples = 501;
  Tolerances tol{};
  unsigned seed = 42;

  // Detuning sweeps (units of Omega1): gradient, stability, multistability.
  double delta_min = -2.0;
  double delta_max = 2.0;
  int delta_points = 81;

  std::vector<double> omega2_ratios;  // t_s sweep, empty to skip
  double ts_rel_tol = 0.01;

  double coupling_ratio = 0.0;  // effective: target G1/kappa, 0 keeps power1

  int spectrum_points = 1 << 14;
  double omega_min = 0.0;  // 0 selects the default window
  double omega_max = 0.0;

  double alpha_max = 1e6;
  int alpha_points = 40;
  double alpha1_fixed = 0.0;

  ModelParams model() const {
    ModelParams mp = nondimensionalize(physical, optical_noise);
    return mp;
  }
};

namespace detail {

inline std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

enum class Dim { mass, rate, temperature, length, power, none };

inline double prefix_factor(const std::string& p, const std::string& key) {
  static const std::map<std::string, double> table{
      {"", 1.0}, {"p", 1e-12}, {"n", 1e-9}, {"u", 1e-6}, {"m", 1e-3},
      {"k", 1e3}, {"M", 1e6},  {"G", 1e9}};
  auto it = table.find(p);
  if (it == table.end()) throw ConfigError(key + ": unknown unit prefix '" + p + "'");
  return it->second;
}

inline double parse_number(const std::string& text, const std::string& key, std::string* rest) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  if (!std::isfinite(v)) throw ConfigError(key + ": value must be finite");
  *rest = trim(text.substr(used));
  return v;
}

inline double parse_quantity(const std::string& text, Dim dim, FrequencyConvention fc,
                             const std::string& key) {
  std::string unit;
  const double v = parse_number(trim(text), key, &unit);
  auto split = [&](const std::string& base) -> std::pair<bool, double> {
    if (unit.size() < base.size() || unit.compare(unit.size() - base.size(), base.size(), base) != 0)
      return {false, 0.0};
    return {true, prefix_factor(unit.substr(0, unit.size() - base.size()), key)};
  };
  switch (dim) {
    case Dim::none:
      if (!unit.empty()) throw ConfigError(key + ": dimensionless, unit '" + unit + "' not allowed");
      return v;
    case Dim::mass: {
      if (unit.empty()) return v;
      auto [ok, f] = split("g");
      if (!ok) throw ConfigError(key + ": mass unit must be g with a prefix, got '" + unit + "'");
      return v * f * 1e-3;
    }
    case Dim::rate: {
      if (unit.empty())
        return fc == FrequencyConvention::angular ? v : 2 * std::numbers::pi * v;
      if (auto [ok, f] = split("rad/s"); ok) return v * f;
      if (auto [ok, f] = split("Hz"); ok) return 2 * std::numbers::pi * v * f;
      throw ConfigError(key + ": rate unit must be Hz or rad/s, got '" + unit + "'");
    }
    case Dim::temperature: {
      if (unit.empty()) return v;
      auto [ok, f] = split("K");
      if (!ok) throw ConfigError(key + ": temperature unit must be K, got '" + unit + "'");
      return v * f;
    }
    case Dim::length: {
      if (unit.empty()) return v;
      auto [ok, f] = split("m");
      if (!ok) throw ConfigError(key + ": length unit must be m, got '" + unit + "'");
      return v * f;
    }
    case Dim::power: {
      if (unit.empty()) return v;
      auto [ok, f] = split("W");
      if (!ok) throw ConfigError(key + ": power unit must be W, got '" + unit + "'");
      return v * f;
    }
  }
  return v;
}

template <class E>
E parse_enum(const std::string& text, const std::string& key,
             std::initializer_list<std::pair<const char*, E>> options) {
  const std::string t = trim(text);
  std::string names;
  for (const auto& [name, val] : options) {
    if (t == name) return val;
    names += std::string(names.empty() ? "" : ", ") + name;
  }
  throw ConfigError(key + ": expected one of {" + names + "}, got '" + t + "'");
}

inline int parse_int(const std::string& text, const std::string& key, int min_value) {
  std::string rest;
  const double v = parse_number(text, key, &rest);
  if (!rest.empty() || v != std::floor(v) || v < min_value || v > 1e9)
    throw ConfigError(key + ": expected an integer >= " + std::to_string(min_value));
  return static_cast<int>(v);
}

inline std::vector<double> parse_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_quantity(item, Dim::none, FrequencyConvention::angular, key));
  }
  return out;
}

}  // namespace detail

/// Parses INI text. Unknown sections and keys raise ConfigError.
inline RunConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  RunConfig cfg;
  using detail::Dim;
  for (const auto& [section, body] : tree) {
    if (section != "physical" && section != "run")
      throw ConfigError("unknown section [" + section + "]");
    if (body.empty() && !body.data().empty())
      throw ConfigError("key '" + section + "' outside a section");
  }
  const pt::ptree empty;
  const pt::ptree& phys = tree.get_child("physical", empty);
  const pt::ptree& run = tree.get_child("run", empty);

  // frequency_convention first: it decides how bare rates are read.
  if (auto fc = phys.get_optional<std::string>("frequency_convention"))
    cfg.frequency_convention = detail::parse_enum<FrequencyConvention>(
        *fc, "physical.frequency_convention",
        {{"angular", FrequencyConvention::angular}, {"ordinary", FrequencyConvention::ordinary}});
  const auto fc = cfg.frequency_convention;
  auto& p = cfg.physical;
  for (const auto& [key, node] : phys) {
    const std::string v = node.data();
    const std::string k = "physical." + key;
    if (key == "frequency_convention") continue;
    else if (key == "mass") p.m = detail::parse_quantity(v, Dim::mass, fc, k);
    else if (key == "omega1") p.Omega1 = detail::parse_quantity(v, Dim::rate, fc, k);
    else if (key == "omega2") p.Omega2 = detail::parse_quantity(v, Dim::rate, fc, k);
    else if (key == "gamma") p.gamma1 = p.gamma2 = detail::parse_quantity(v, Dim::rate, fc, k);
    else if (key == "gamma1") p.gamma1 = detail::parse_quantity(v, Dim::rate, fc, k);
    else if (key == "gamma2") p.gamma2 = detail::parse_quantity(v, Dim::rate, fc, k);
    else if (key == "temperature") p.T_bath = detail::parse_quantity(v, Dim::temperature, fc, k);
    else if (key == "length") p.L = detail::parse_quantity(v, Dim::length, fc, k);
    else if (key == "kappa") p.kappa = detail::parse_quantity(v, Dim::rate, fc, k);
    else if (key == "wavelength") p.lambda_L = detail::parse_quantity(v, Dim::length, fc, k);
    else if (key == "power1") p.P1 = detail::parse_quantity(v, Dim::power, fc, k);
    else if (key == "power2") p.P2 = detail::parse_quantity(v, Dim::power, fc, k);
    else if (key == "detuning") p.Delta = detail::parse_quantity(v, Dim::rate, fc, k);
    else if (key == "topology")
      p.topology = detail::parse_enum<Topology>(
          v, k, {{"unidirectional", Topology::unidirectional}, {"bidirectional", Topology::bidirectional}});
    else throw ConfigError("unknown key " + k);
  }
  for (const auto& [key, node] : run) {
    const std::string v = node.data();
    const std::string k = "run." + key;
    auto num = [&] { return detail::parse_quantity(v, Dim::none, fc, k); };
    if (key == "horizon") cfg.horizon = num();
    else if (key == "samples") cfg.samples = detail::parse_int(v, k, 2);
    else if (key == "rtol") cfg.tol.rtol = num();
    else if (key == "atol") cfg.tol.atol = num();
    else if (key == "seed") cfg.seed = static_cast<unsigned>(detail::parse_int(v, k, 0));
    else if (key == "optical_noise")
      cfg.optical_noise = detail::parse_enum<OpticalNoise>(
          v, k, {{"vacuum_half", OpticalNoise::vacuum_half}, {"printed", OpticalNoise::printed}});
    else if (key == "cubic_kappa_convention")
      cfg.cubic_kappa = detail::parse_enum<CubicKappaConvention>(
          v, k, {{"printed", CubicKappaConvention::printed}, {"quarter", CubicKappaConvention::quarter}});
    else if (key == "mirror2_spectrum")
      cfg.mirror2_spectrum = detail::parse_enum<Mirror2Form>(
          v, k, {{"derived", Mirror2Form::derived}, {"printed", Mirror2Form::printed}});
    else if (key == "readout_form")
      cfg.readout_form = detail::parse_enum<ReadoutForm>(
          v, k, {{"derived", ReadoutForm::derived}, {"printed", ReadoutForm::printed}});
    else if (key == "energy_offset")
      cfg.energy_offset = detail::parse_enum<EnergyOffset>(
          v, k, {{"plus_half", EnergyOffset::plus_half}, {"minus_half", EnergyOffset::minus_half}});
    else if (key == "delta_min") cfg.delta_min = num();
    else if (key == "delta_max") cfg.delta_max = num();
    else if (key == "delta_points") cfg.delta_points = detail::parse_int(v, k, 1);
    else if (key == "omega2_ratios") cfg.omega2_ratios = detail::parse_list(v, k);
    else if (key == "ts_rel_tol") cfg.ts_rel_tol = num();
    else if (key == "coupling_ratio") cfg.coupling_ratio = num();
    else if (key == "spectrum_points") cfg.spectrum_points = detail::parse_int(v, k, 3);
    else if (key == "omega_min") cfg.omega_min = num();
    else if (key == "omega_max") cfg.omega_max = num();
    else if (key == "alpha_max") cfg.alpha_max = num();
    else if (key == "alpha_points") cfg.alpha_points = detail::parse_int(v, k, 2);
    else if (key == "alpha1_fixed") cfg.alpha1_fixed = num();
    else throw ConfigError("unknown key " + k);
  }
  if (!(cfg.horizon > 0)) throw ConfigError("run.horizon must be positive");
  if (!(cfg.tol.rtol > 0) || !(cfg.tol.atol > 0)) throw ConfigError("run.rtol and run.atol must be positive");
  if (cfg.delta_max < cfg.delta_min) throw ConfigError("run.delta_max is below run.delta_min");
  if (cfg.omega_max != 0.0 && !(cfg.omega_max > cfg.omega_min))
    throw ConfigError("run.omega_max must exceed run.omega_min");
  if (!(cfg.alpha_max > 0)) throw ConfigError("run.alpha_max must be positive");
  if (!(cfg.ts_rel_tol > 0)) throw ConfigError("run.ts_rel_tol must be positive");
  if (cfg.coupling_ratio < 0) throw ConfigError("run.coupling_ratio must be nonnegative");
  return cfg;
}

}  // namespace cascopt
