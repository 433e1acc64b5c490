#pragma once

// Two-mirror model with the cavities adiabatically eliminated. Mode
// operators are taken in frames rotating at the bare frequencies,
// b_j = bbar_j exp(-i Omega_j t).

#include <cmath>
#include <array>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cascopt/diagnostics.hpp"
#include "cascopt/linearized.hpp"
#include "cascopt/lyapunov.hpp"
#include "cascopt/meanfield.hpp"
#include "cascopt/ode.hpp"
#include "cascopt/params.hpp"

namespace cascopt {

inline cplx optical_susceptibility(double omega, double kappa, double Delta) {
  return 1.0 / cplx(0.5 * kappa, -(omega - Delta));
}

struct EffectiveParams {
  // Optical spring shift relative to Omega_j (frequency in the rotating frame).
  std::array<double, 2> Omega_eff{0.0, 0.0};
  std::array<double, 2> Gamma_eff{0.0, 0.0};
  cplx Lambda{};
  // Bare frequencies, needed for the frame phase when Omega1 != Omega2.
  std::array<double, 2> Omega{1.0, 1.0};
  std::array<double, 2> gamma{0.0, 0.0};
  std::array<double, 2> nbar{0.0, 0.0};
  double kappa = 0.0;

  double lab_frequency(int j) const { return Omega[j] + Omega_eff[j]; }
};

inline cplx cascaded_coupling(double omega, const ModelParams& mp, const MeanFieldState& s) {
  const cplx G1 = s.coupling(mp, 0), G2 = s.coupling(mp, 1);
  const double D1 = s.detuning(mp, 0), D2 = s.detuning(mp, 1);
  const cplx c1p = optical_susceptibility(omega, mp.kappa, D1);
  const cplx c2p = optical_susceptibility(omega, mp.kappa, D2);
  const cplx c1m = optical_susceptibility(-omega, mp.kappa, D1);
  const cplx c2m = optical_susceptibility(-omega, mp.kappa, D2);
  return G2 * std::conj(G1) * std::conj(c1m) * std::conj(c2m) - std::conj(G2) * G1 * c1p * c2p;
}

inline EffectiveParams effective_rates(const ModelParams& mp, const MeanFieldState& s) {
  EffectiveParams ep;
  double gmax = 0.0;
  for (int j = 0; j < 2; ++j) {
    const double D = s.detuning(mp, j);
    const double W = mp.Omega[j];
    const cplx X = 0.5 * std::norm(s.coupling(mp, j)) *
                   (optical_susceptibility(W, mp.kappa, D) -
                    std::conj(optical_susceptibility(-W, mp.kappa, D)));
    ep.Gamma_eff[j] = X.real();
    ep.Omega_eff[j] = X.imag();
    gmax = std::max(gmax, std::abs(s.coupling(mp, j)));
  }
  ep.Lambda = cascaded_coupling(mp.Omega[0], mp, s);
  ep.Omega = mp.Omega;
  ep.gamma = mp.gamma;
  ep.nbar = mp.nbar;
  ep.kappa = mp.kappa;
  if (gmax > mp.kappa)
    warn("effective_rates: |G| = " + std::to_string(gmax) + " exceeds kappa = " +
         std::to_string(mp.kappa) + ", adiabatic elimination is not justified");
  return ep;
}

// Reduced-model moments K = <{u, u^+}> with u = (bbar1, bbar1^+, bbar2, bbar2^+),
// dK/dt = S K + K S^+ + N.
struct EffectiveState {
  double t = 0.0;
  Eigen::Matrix4cd K = Eigen::Matrix4cd::Identity();
};

struct EffectiveTrajectory {
  std::vector<EffectiveState> samples;
  std::vector<CovarianceState> quadratures;  // mirror basis (q1, p1, q2, p2)
  std::vector<std::string> warnings;
  OdeStats stats;
};

inline Eigen::Matrix4cd effective_drift(const EffectiveParams& ep, double t) {
  const cplx i{0.0, 1.0};
  Eigen::Matrix4cd S = Eigen::Matrix4cd::Zero();
  for (int j = 0; j < 2; ++j) {
    const double damp = ep.Gamma_eff[j] + 0.5 * ep.gamma[j];
    S(2 * j, 2 * j) = -i * ep.Omega_eff[j] - damp;
    S(2 * j + 1, 2 * j + 1) = i * ep.Omega_eff[j] - damp;
  }
  const cplx phase = std::exp(i * (ep.Omega[1] - ep.Omega[0]) * t);
  const cplx c = -0.5 * ep.kappa * ep.Lambda * phase;
  S(2, 0) = c;
  S(3, 1) = std::conj(c);
  return S;
}

inline Eigen::Matrix4cd effective_diffusion(const EffectiveParams& ep) {
  Eigen::Matrix4cd N = Eigen::Matrix4cd::Zero();
  for (int j = 0; j < 2; ++j) {
    const double v = ep.gamma[j] * (2 * ep.nbar[j] + 1);
    N(2 * j, 2 * j) = v;
    N(2 * j + 1, 2 * j + 1) = v;
  }
  return N;
}

/// Rows map u to (q1, p1, q2, p2) at time t.
inline Eigen::Matrix4cd mode_to_quadrature(const EffectiveParams& ep, double t) {
  const cplx i{0.0, 1.0};
  const double r = 1.0 / std::numbers::sqrt2;
  Eigen::Matrix4cd T = Eigen::Matrix4cd::Zero();
  for (int j = 0; j < 2; ++j) {
    const cplx e = std::exp(-i * ep.Omega[j] * t);
    T(2 * j, 2 * j) = r * e;
    T(2 * j, 2 * j + 1) = r * std::conj(e);
    T(2 * j + 1, 2 * j) = -i * r * e;
    T(2 * j + 1, 2 * j + 1) = i * r * std::conj(e);
  }
  return T;
}

inline CovarianceState to_quadratures(const EffectiveState& s, const EffectiveParams& ep) {
  const Eigen::Matrix4cd T = mode_to_quadrature(ep, s.t);
  CovarianceState c;
  c.t = s.t;
  c.basis = CovarianceBasis::mirrors;
  c.C = 0.5 * (T * s.K * T.adjoint()).real();
  c.C = (0.5 * (c.C + c.C.transpose())).eval();
  return c;
}

inline EffectiveState from_quadratures(const CovarianceState& c, const EffectiveParams& ep) {
  const CovarianceState m = mirror_marginal(c);
  const Eigen::Matrix4cd T = mode_to_quadrature(ep, m.t);
  EffectiveState s;
  s.t = m.t;
  s.K = 2.0 * T.adjoint() * m.C.cast<cplx>() * T;
  return s;
}

inline EffectiveTrajectory evolve_effective_covariance(const CovarianceState& C0,
                                                       const EffectiveParams& ep,
                                                       std::span<const double> times,
                                                       const Tolerances& tol = {}) {
  const Eigen::Matrix4cd N = effective_diffusion(ep);
  auto rhs = [&](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    Eigen::Map<const Eigen::Matrix<cplx, 4, 4>> K(reinterpret_cast<const cplx*>(y.data()));
    const Eigen::Matrix4cd S = effective_drift(ep, t);
    dy.resize(32);
    Eigen::Map<Eigen::Matrix<cplx, 4, 4>> D(reinterpret_cast<cplx*>(dy.data()));
    D = S * K + K * S.adjoint() + N;
  };
  const EffectiveState s0 = from_quadratures(C0, ep);
  Eigen::VectorXd y0(32);
  Eigen::Map<Eigen::Matrix<cplx, 4, 4>>(reinterpret_cast<cplx*>(y0.data())) = s0.K;
  OdeOptions opt;
  opt.tol = tol;
  EffectiveTrajectory tr;
  auto ys = integrate_dense(rhs, y0, s0.t, times, opt,
                            [](Eigen::VectorXd& y) {
                              Eigen::Map<Eigen::Matrix<cplx, 4, 4>> K(reinterpret_cast<cplx*>(y.data()));
                              K = (0.5 * (K + K.adjoint())).eval();
                              return true;
                            },
                            &tr.stats);
  for (std::size_t k = 0; k < ys.size(); ++k) {
    EffectiveState s;
    s.t = times[k];
    s.K = Eigen::Map<const Eigen::Matrix<cplx, 4, 4>>(reinterpret_cast<const cplx*>(ys[k].data()));
    tr.quadratures.push_back(to_quadratures(s, ep));
    tr.samples.push_back(s);
  }
  for (const auto& c : tr.quadratures) {
    const double nu = min_symplectic_eigenvalue(c.C);
    if (nu < 0.5 - 1e-6)
      tr.warnings.push_back("physicality violation at t = " + std::to_string(c.t) +
                            ": symplectic eigenvalue " + std::to_string(nu));
  }
  return tr;
}

/// Steady K for Omega1 = Omega2 (time-independent drift).
inline EffectiveState steady_effective(const EffectiveParams& ep) {
  if (ep.Omega[0] != ep.Omega[1])
    throw ParameterError("Omega", "steady reduced state needs Omega1 == Omega2");
  EffectiveState s;
  s.t = 0.0;
  s.K = solve_lyapunov<cplx>(effective_drift(ep, 0.0), effective_diffusion(ep));
  return s;
}

/// Drive E1 for which the steady |G1| equals ratio * kappa. Bisection in
/// log E over the stable branch reached from rest.
inline double drive_for_coupling(ModelParams mp, double ratio, const SteadyOptions& opt = {}) {
  const double target = ratio * mp.kappa;
  auto coupling_at = [&](double E) {
    mp.E[0] = E;
    return std::abs(steady_meanfield(mp, opt).coupling(mp, 0));
  };
  // Linear-response guess, then bracket.
  double hi = target / (mp.g[0] * std::abs(optical_susceptibility(0.0, mp.kappa, mp.delta)));
  double lo = hi;
  while (coupling_at(hi) < target) hi *= 2;
  while (coupling_at(lo) > target) lo *= 0.5;
  for (int it = 0; it < 200 && hi / lo - 1 > 1e-14; ++it) {
    const double mid = std::sqrt(lo * hi);
    (coupling_at(mid) < target ? lo : hi) = mid;
  }
  return std::sqrt(lo * hi);
}

}  // namespace cascopt
