#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "cascopt/errors.hpp"

namespace cascopt {

namespace si {
inline constexpr double hbar = 1.054571817e-34;   // J s
inline constexpr double k_B = 1.380649e-23;       // J / K
inline constexpr double c = 299792458.0;          // m / s
}  // namespace si

enum class Topology { unidirectional, bidirectional };

// Diffusion assigned to each cavity quadrature by the optical vacuum input.
// `vacuum_half` keeps an undriven cavity at <x^2> = 1/2, the same convention
// used for the mirrors; `printed` uses kappa (twice that).
enum class OpticalNoise { vacuum_half, printed };

inline const char* to_string(Topology t) {
  return t == Topology::unidirectional ? "unidirectional" : "bidirectional";
}

inline const char* to_string(OpticalNoise n) {
  return n == OpticalNoise::vacuum_half ? "vacuum_half" : "printed";
}

// SI inputs. Every rate is an angular rate in rad/s.
struct PhysicalParams {
  double m = 150e-12;
  double Omega1 = 2 * std::numbers::pi * 1e6;
  double Omega2 = 2 * std::numbers::pi * 1e6;
  double gamma1 = 2 * std::numbers::pi * 1.0;
  double gamma2 = 2 * std::numbers::pi * 1.0;
  double T_bath = 300.0;
  double L = 25e-3;
  double kappa = 1.34e6;
  double lambda_L = 1064e-9;
  double P1 = 2e-3;
  double Delta = 2 * std::numbers::pi * 1e6;
  Topology topology = Topology::unidirectional;
  double P2 = 0.0;
};

// Dimensionless model: rates in units of Omega1, times in units of 1/Omega1.
struct ModelParams {
  double delta = 1.0;
  double kappa = 0.2;
  std::array<double, 2> gamma{1e-3, 1e-3};
  std::array<double, 2> Omega{1.0, 1.0};
  std::array<double, 2> g{1e-3, 1e-3};
  std::array<double, 2> E{0.0, 0.0};
  std::array<double, 2> nbar{0.0, 0.0};
  Topology topology = Topology::unidirectional;
  OpticalNoise optical_noise = OpticalNoise::vacuum_half;
  // Omega1 in rad/s; converts back to SI. tau = 2 pi / omega_unit.
  double omega_unit = 2 * std::numbers::pi * 1e6;
  double tau = 1e-6;
};

/// Bose-Einstein occupation 1/(exp(hbar Omega / k_B T) - 1). T = 0 gives 0.
inline double thermal_occupation(double Omega, double T) {
  if (T <= 0.0) return 0.0;
  const double x = si::hbar * Omega / (si::k_B * T);
  return 1.0 / std::expm1(x);
}

namespace detail {
inline void require_positive(double v, const char* field) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw ParameterError(field, "must be strictly positive and finite");
}
}  // namespace detail

inline void validate(const PhysicalParams& p) {
  using detail::require_positive;
  require_positive(p.m, "m");
  require_positive(p.Omega1, "Omega1");
  require_positive(p.Omega2, "Omega2");
  require_positive(p.gamma1, "gamma1");
  require_positive(p.gamma2, "gamma2");
  require_positive(p.T_bath, "T_bath");
  require_positive(p.L, "L");
  require_positive(p.kappa, "kappa");
  require_positive(p.lambda_L, "lambda_L");
  require_positive(p.P1, "P1");
  if (!std::isfinite(p.Delta)) throw ParameterError("Delta", "must be finite");
  if (!(p.P2 >= 0.0) || !std::isfinite(p.P2))
    throw ParameterError("P2", "must be nonnegative and finite");
  if (p.topology == Topology::unidirectional && p.P2 != 0.0)
    throw ParameterError("P2", "topology-consistency: unidirectional topology pumps cavity 1 only (P2 must be 0)");
}

/// Converts SI inputs into the dimensionless model used everywhere else.
/// Frequencies and rates are divided by Omega1; g_j = omega_c / L *
/// sqrt(hbar / (m Omega_j)) and E_j = sqrt(2 kappa P_j / (hbar omega_L)).
inline ModelParams nondimensionalize(const PhysicalParams& p,
                                     OpticalNoise noise = OpticalNoise::vacuum_half) {
  validate(p);
  const double omega_L = 2 * std::numbers::pi * si::c / p.lambda_L;
  const double omega_c = omega_L + p.Delta;
  const double unit = p.Omega1;
  auto coupling = [&](double Omega) {
    return omega_c / p.L * std::sqrt(si::hbar / (p.m * Omega));
  };
  auto drive = [&](double P) {
    return std::sqrt(2 * p.kappa * P / (si::hbar * omega_L));
  };

  ModelParams mp;
  mp.delta = p.Delta / unit;
  mp.kappa = p.kappa / unit;
  mp.gamma = {p.gamma1 / unit, p.gamma2 / unit};
  mp.Omega = {1.0, p.Omega2 / unit};
  mp.g = {coupling(p.Omega1) / unit, coupling(p.Omega2) / unit};
  mp.E = {drive(p.P1) / unit, drive(p.P2) / unit};
  mp.nbar = {thermal_occupation(p.Omega1, p.T_bath),
             thermal_occupation(p.Omega2, p.T_bath)};
  mp.topology = p.topology;
  mp.optical_noise = noise;
  mp.omega_unit = unit;
  mp.tau = 2 * std::numbers::pi / unit;
  return mp;
}

}  // namespace cascopt
