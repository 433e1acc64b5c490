#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cascopt/diagnostics.hpp"
#include "cascopt/errors.hpp"
#include "cascopt/gaussinfo.hpp"
#include "cascopt/linearized.hpp"
#include "cascopt/meanfield.hpp"
#include "cascopt/parallel.hpp"
#include "cascopt/params.hpp"

namespace cascopt {

/// (<dq^2> + <dp^2> - 1)/2 of mirror j.
inline double effective_occupation(const CovarianceState& c, int mirror) {
  const CovarianceState m = mirror_marginal(c);
  const int q = 2 * mirror;
  const double n = 0.5 * (m.C(q, q) + m.C(q + 1, q + 1) - 1.0);
  if (n < -1e-9) warn("effective_occupation: negative occupation " + std::to_string(n));
  return n;
}

/// Inverse Bose law, Omega in rad/s, result in K. n <= 0 maps to 0.
inline double effective_temperature(double n_eff, double Omega) {
  if (!(n_eff > 0.0)) return 0.0;
  return si::hbar * Omega / (si::k_B * std::log1p(1.0 / n_eff));
}

enum class EnergyOffset { plus_half, minus_half };

inline const char* to_string(EnergyOffset o) {
  return o == EnergyOffset::plus_half ? "plus_half" : "minus_half";
}

/// Mean mechanical energy hbar Omega (n +- 1/2) in J. The printed form uses
/// -1/2; the zero-point convention is +1/2.
inline double mean_energy(double n_eff, double Omega, EnergyOffset o = EnergyOffset::plus_half) {
  return si::hbar * Omega * (n_eff + (o == EnergyOffset::plus_half ? 0.5 : -0.5));
}

struct TemperatureTrace {
  std::vector<double> t;  // units of tau
  std::array<std::vector<double>, 2> n_eff;
  std::array<std::vector<double>, 2> T_eff;  // K
  std::optional<double> t_s;                 // mirror 2, units of tau
};

inline TemperatureTrace temperature_trace(std::span<const CovarianceState> samples,
                                          const ModelParams& mp) {
  TemperatureTrace tr;
  for (const auto& c : samples) {
    tr.t.push_back(c.t / (2 * std::numbers::pi));
    for (int j = 0; j < 2; ++j) {
      const double n = effective_occupation(c, j);
      tr.n_eff[j].push_back(n);
      tr.T_eff[j].push_back(effective_temperature(n, mp.Omega[j] * mp.omega_unit));
    }
  }
  return tr;
}

struct ThermalizationOptions {
  double rel_tol = 0.01;
  // Trailing fraction of the samples used to estimate the terminal value.
  double terminal_fraction = 0.1;
};

/// First sample time after which the trace stays within rel_tol of its
/// terminal-window mean.
inline double thermalization_time(std::span<const double> t, std::span<const double> v,
                                  const ThermalizationOptions& opt = {}) {
  if (t.size() != v.size() || t.empty())
    throw ParameterError("trace", "time and value arrays must be nonempty and equal length");
  const std::size_t n = t.size();
  const std::size_t w = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(opt.terminal_fraction * static_cast<double>(n))));
  double mean = 0.0;
  for (std::size_t k = n - w; k < n; ++k) mean += v[k];
  mean /= static_cast<double>(w);
  const double scale = std::abs(mean) > 0 ? std::abs(mean) : 1.0;
  for (std::size_t k = n - w; k < n; ++k)
    if (std::abs(v[k] - mean) / scale >= opt.rel_tol)
      throw NotConverged("thermalization_time: terminal window varies by more than rel_tol");
  std::size_t first = n;
  while (first > 0 && std::abs(v[first - 1] - mean) / scale < opt.rel_tol) --first;
  return t[first];
}

inline double thermalization_time(TemperatureTrace& tr, const ThermalizationOptions& opt = {}) {
  const double ts = thermalization_time(tr.t, tr.T_eff[1], opt);
  tr.t_s = ts;
  return ts;
}

struct GradientPoint {
  double delta = 0.0;
  bool stable = false;
  std::array<double, 2> n_eff{0.0, 0.0};
  std::array<double, 2> T_eff{0.0, 0.0};
  double gradient = 0.0;  // T_eff_2 - T_eff_1
  double mutual_info = 0.0;
  std::string error;  // set when the point is excluded
};

inline GradientPoint steady_point(const ModelParams& mp) {
  GradientPoint pt;
  pt.delta = mp.delta;
  try {
    const MeanFieldState s = steady_meanfield(mp);
    const CovarianceState c = steady_covariance(build_drift_diffusion(s, mp));
    for (int j = 0; j < 2; ++j) {
      pt.n_eff[j] = effective_occupation(c, j);
      pt.T_eff[j] = effective_temperature(pt.n_eff[j], mp.Omega[j] * mp.omega_unit);
    }
    pt.gradient = pt.T_eff[1] - pt.T_eff[0];
    pt.mutual_info = mutual_information(extract_mirror_pair(c));
    pt.stable = true;
  } catch (const NumericalError& e) {
    pt.error = std::string(e.kind()) + ": " + e.what();
  }
  return pt;
}

/// Steady temperatures and mutual information over a detuning grid. Points
/// without a stable steady state are flagged, not fatal.
inline std::vector<GradientPoint> steady_gradient(const ModelParams& mp,
                                                  std::span<const double> deltas,
                                                  unsigned threads = 1) {
  std::vector<GradientPoint> out(deltas.size());
  parallel_for(deltas.size(), threads, [&](std::size_t i) {
    ModelParams m = mp;
    m.delta = deltas[i];
    out[i] = steady_point(m);
  });
  return out;
}

}  // namespace cascopt
