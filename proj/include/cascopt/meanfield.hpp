#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cascopt/errors.hpp"
#include "cascopt/ode.hpp"
#include "cascopt/params.hpp"

namespace cascopt {

using cplx = std::complex<double>;

// Classical mean values. Time in units of 1/Omega1.
struct MeanFieldState {
  double t = 0.0;
  std::array<double, 2> Q{0.0, 0.0};
  std::array<double, 2> P{0.0, 0.0};
  std::array<cplx, 2> A{cplx{}, cplx{}};

  // Effective detuning Delta_j - g_j Q_j.
  double detuning(const ModelParams& mp, int j) const { return mp.delta - mp.g[j] * Q[j]; }
  // Effective optomechanical coupling g_j A_j.
  cplx coupling(const ModelParams& mp, int j) const { return mp.g[j] * A[j]; }
};

using MeanFieldVector = Eigen::Matrix<double, 8, 1>;

// Layout: Q1, P1, Re A1, Im A1, Q2, P2, Re A2, Im A2.
inline MeanFieldVector to_vector(const MeanFieldState& s) {
  MeanFieldVector v;
  for (int j = 0; j < 2; ++j) {
    v[4 * j + 0] = s.Q[j];
    v[4 * j + 1] = s.P[j];
    v[4 * j + 2] = s.A[j].real();
    v[4 * j + 3] = s.A[j].imag();
  }
  return v;
}

inline MeanFieldState from_vector(const Eigen::Ref<const Eigen::VectorXd>& v, double t = 0.0) {
  MeanFieldState s;
  s.t = t;
  for (int j = 0; j < 2; ++j) {
    s.Q[j] = v[4 * j + 0];
    s.P[j] = v[4 * j + 1];
    s.A[j] = {v[4 * j + 2], v[4 * j + 3]};
  }
  return s;
}

// Cavity amplitude decay in the mean-field equations: kappa/2 for the chiral
// guide, the full kappa for the bidirectional one (same as its drift blocks).
inline double cavity_damping(const ModelParams& mp) {
  return mp.topology == Topology::unidirectional ? 0.5 * mp.kappa : mp.kappa;
}

/// Time derivative of the mean-field state. The returned object carries the
/// derivatives in its Q, P, A slots and t = s.t.
inline MeanFieldState meanfield_rhs(const MeanFieldState& s, const ModelParams& mp) {
  MeanFieldState d;
  d.t = s.t;
  const double kc = cavity_damping(mp);
  for (int j = 0; j < 2; ++j) {
    d.Q[j] = mp.Omega[j] * s.P[j];
    d.P[j] = -mp.Omega[j] * s.Q[j] - mp.gamma[j] * s.P[j] + mp.g[j] * std::norm(s.A[j]);
  }
  const cplx i{0.0, 1.0};
  const double D1 = s.detuning(mp, 0), D2 = s.detuning(mp, 1);
  d.A[0] = -kc * s.A[0] - i * D1 * s.A[0] + mp.E[0];
  d.A[1] = -kc * s.A[1] - i * D2 * s.A[1] - mp.kappa * s.A[0];
  if (mp.topology == Topology::bidirectional) {
    d.A[0] += -mp.kappa * s.A[1];
    d.A[1] += mp.E[1];
  }
  return d;
}

/// Jacobian of meanfield_rhs in the to_vector layout.
inline Eigen::Matrix<double, 8, 8> meanfield_jacobian(const MeanFieldState& s,
                                                      const ModelParams& mp) {
  Eigen::Matrix<double, 8, 8> J = Eigen::Matrix<double, 8, 8>::Zero();
  const double kc = cavity_damping(mp);
  for (int j = 0; j < 2; ++j) {
    const int o = 4 * j;
    const double ar = s.A[j].real(), ai = s.A[j].imag();
    const double D = s.detuning(mp, j);
    J(o + 0, o + 1) = mp.Omega[j];
    J(o + 1, o + 0) = -mp.Omega[j];
    J(o + 1, o + 1) = -mp.gamma[j];
    J(o + 1, o + 2) = 2 * mp.g[j] * ar;
    J(o + 1, o + 3) = 2 * mp.g[j] * ai;
    // d(Re A)/dt = -kc Re A + D Im A + ..., d(Im A)/dt = -kc Im A - D Re A
    J(o + 2, o + 0) = -mp.g[j] * ai;
    J(o + 2, o + 2) = -kc;
    J(o + 2, o + 3) = D;
    J(o + 3, o + 0) = mp.g[j] * ar;
    J(o + 3, o + 2) = -D;
    J(o + 3, o + 3) = -kc;
  }
  J(6, 2) = -mp.kappa;
  J(7, 3) = -mp.kappa;
  if (mp.topology == Topology::bidirectional) {
    J(2, 6) = -mp.kappa;
    J(3, 7) = -mp.kappa;
  }
  return J;
}

// Drive-relative scale used for residual bounds (the dimensionless drive can
// reach 1e4 and more, so absolute residuals near 1e-12 are below roundoff).
inline double residual_scale(const MeanFieldState& s, const ModelParams& mp) {
  double sc = std::max({1.0, std::abs(mp.E[0]), std::abs(mp.E[1])});
  for (int j = 0; j < 2; ++j) sc = std::max(sc, std::abs(mp.Omega[j] * s.Q[j]));
  return sc;
}

inline double scaled_residual(const MeanFieldState& s, const ModelParams& mp) {
  return to_vector(meanfield_rhs(s, mp)).norm() / residual_scale(s, mp);
}

struct MeanFieldTrajectory {
  std::vector<MeanFieldState> samples;
  OdeStats stats;
};

/// Adaptive integration of the mean-field equations, sampled at `times`.
inline MeanFieldTrajectory integrate_meanfield(const MeanFieldState& s0,
                                               const ModelParams& mp,
                                               std::span<const double> times,
                                               const Tolerances& tol = {}) {
  OdeOptions opt;
  opt.tol = tol;
  auto rhs = [&mp](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    MeanFieldState s = from_vector(y, t);
    dy = to_vector(meanfield_rhs(s, mp));
  };
  MeanFieldTrajectory traj;
  Eigen::VectorXd y0 = to_vector(s0);
  auto ys = integrate_dense(rhs, y0, s0.t, times, opt, &traj.stats);
  traj.samples.reserve(ys.size());
  for (std::size_t k = 0; k < ys.size(); ++k)
    traj.samples.push_back(from_vector(ys[k], times[k]));
  return traj;
}

/// Convenience overload: samples evenly on [s0.t, t_end].
inline MeanFieldTrajectory integrate_meanfield(const MeanFieldState& s0,
                                               const ModelParams& mp, double t_end,
                                               std::size_t n_samples,
                                               const Tolerances& tol = {}) {
  if (!(t_end > s0.t)) throw ParameterError("t_end", "must exceed the initial time");
  auto times = linspace(s0.t, t_end, std::max<std::size_t>(n_samples, 2));
  return integrate_meanfield(s0, mp, times, tol);
}

/// Damped Newton iteration on meanfield_rhs = 0 from `seed`.
inline MeanFieldState refine_fixed_point(const ModelParams& mp, MeanFieldState seed,
                                         double tol = 1e-12, int max_iter = 200) {
  MeanFieldVector x = to_vector(seed);
  auto F = [&mp](const MeanFieldVector& v) { return to_vector(meanfield_rhs(from_vector(v), mp)); };
  MeanFieldVector f = F(x);
  for (int it = 0; it < max_iter; ++it) {
    MeanFieldState s = from_vector(x);
    if (f.norm() / residual_scale(s, mp) < tol) {
      s.t = seed.t;
      return s;
    }
    Eigen::Matrix<double, 8, 8> J = meanfield_jacobian(s, mp);
    MeanFieldVector dx = J.fullPivLu().solve(-f);
    if (!dx.allFinite()) break;
    double lam = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 40; ++ls) {
      MeanFieldVector xn = x + lam * dx;
      MeanFieldVector fn = F(xn);
      if (fn.allFinite() && fn.norm() < (1.0 - 1e-4 * lam) * f.norm()) {
        x = xn;
        f = fn;
        improved = true;
        break;
      }
      lam *= 0.5;
    }
    if (!improved) {
      MeanFieldState s2 = from_vector(x);
      if (f.norm() / residual_scale(s2, mp) < tol) {
        s2.t = seed.t;
        return s2;
      }
      break;
    }
  }
  MeanFieldState s = from_vector(x);
  if (f.norm() / residual_scale(s, mp) < tol) return s;
  throw NoConvergence("mean-field Newton iteration did not converge (scaled residual " +
                      std::to_string(f.norm() / residual_scale(s, mp)) + ")");
}

struct SteadyOptions {
  // The Newton seed is the end point of an integration from rest over
  // min(20 / min(gamma), max_seed_horizon).
  double max_seed_horizon = 4000.0;
  double residual_tol = 1e-12;
  Tolerances tol{};
};

/// Linear-cavity (g = 0) fixed point.
inline MeanFieldState linear_fixed_point(const ModelParams& mp) {
  const cplx i{0.0, 1.0};
  MeanFieldState s;
  const double kc = cavity_damping(mp);
  const cplx z = kc + i * mp.delta;
  if (mp.topology == Topology::unidirectional) {
    s.A[0] = mp.E[0] / z;
    s.A[1] = -mp.kappa * s.A[0] / z;
  } else {
    // [[z, k], [k, z]] (A1, A2) = (E1, E2)
    const cplx det = z * z - mp.kappa * mp.kappa;
    s.A[0] = (z * mp.E[0] - mp.kappa * mp.E[1]) / det;
    s.A[1] = (z * mp.E[1] - mp.kappa * mp.E[0]) / det;
  }
  return s;
}

/// Cavity amplitudes for given static mirror positions (P = 0).
inline MeanFieldState fixed_point_for_positions(const ModelParams& mp, double Q1, double Q2) {
  const cplx i{0.0, 1.0};
  MeanFieldState s;
  s.Q = {Q1, Q2};
  const double kc = cavity_damping(mp);
  const cplx z1 = kc + i * s.detuning(mp, 0);
  const cplx z2 = kc + i * s.detuning(mp, 1);
  if (mp.topology == Topology::unidirectional) {
    s.A[0] = mp.E[0] / z1;
    s.A[1] = -mp.kappa * s.A[0] / z2;
  } else {
    const cplx det = z1 * z2 - mp.kappa * mp.kappa;
    s.A[0] = (z2 * mp.E[0] - mp.kappa * mp.E[1]) / det;
    s.A[1] = (z1 * mp.E[1] - mp.kappa * mp.E[0]) / det;
  }
  return s;
}

// Coefficient multiplying kappa^2 in the linear term of the photon-number
// cubic. `printed` uses 1/2; `quarter` uses 1/4, which is |kappa/2 + i Delta|^2
// and makes every branch an exact mean-field fixed point.
enum class CubicKappaConvention { printed, quarter };

inline const char* to_string(CubicKappaConvention c) {
  return c == CubicKappaConvention::printed ? "printed" : "quarter";
}

struct Cubic {
  double a, b, c, d;  // a x^3 + b x^2 + c x + d
  double operator()(double x) const { return ((a * x + b) * x + c) * x + d; }
  double derivative(double x) const { return (3 * a * x + 2 * b) * x + c; }
};

/// Photon-number cubic for cavity j with constant term -drive.
inline Cubic photon_cubic(const ModelParams& mp, int j, double drive,
                          CubicKappaConvention conv = CubicKappaConvention::printed) {
  const double g2 = mp.g[j] * mp.g[j];
  const double W = mp.Omega[j];
  const double kf = conv == CubicKappaConvention::printed ? 0.5 : 0.25;
  return {g2 * g2 / (W * W), -2 * mp.delta * g2 / W,
          mp.delta * mp.delta + kf * mp.kappa * mp.kappa, -drive};
}

/// Real roots of a cubic (degenerating gracefully to quadratic/linear),
/// sorted ascending and Newton-polished.
inline std::vector<double> real_roots(const Cubic& p) {
  std::vector<double> roots;
  auto polish = [&p](double x) {
    for (int k = 0; k < 4; ++k) {
      const double dp = p.derivative(x);
      if (dp == 0.0) break;
      const double step = p(x) / dp;
      if (!std::isfinite(step)) break;
      x -= step;
    }
    return x;
  };
  // Cubic term negligible: solve the quadratic/linear remainder.
  if (p.a == 0.0) {
    if (p.b == 0.0) {
      if (p.c != 0.0) roots.push_back(-p.d / p.c);
      return roots;
    }
    const double disc = p.c * p.c - 4 * p.b * p.d;
    if (disc < 0) return roots;
    const double q = -0.5 * (p.c + std::copysign(std::sqrt(disc), p.c));
    roots.push_back(q / p.b);
    if (q != 0.0) roots.push_back(p.d / q);
    std::sort(roots.begin(), roots.end());
    return roots;
  }
  // Depressed cubic t^3 + P t + R with x = t - b/(3a).
  const double B = p.b / p.a, C = p.c / p.a, D = p.d / p.a;
  const double shift = B / 3.0;
  const double P = C - B * B / 3.0;
  const double R = 2.0 * B * B * B / 27.0 - B * C / 3.0 + D;
  const double h = R * R / 4.0 + P * P * P / 27.0;
  if (h > 0.0) {
    const double sq = std::sqrt(h);
    const double u = std::cbrt(-R / 2.0 + sq);
    const double v = std::cbrt(-R / 2.0 - sq);
    roots.push_back(polish(u + v - shift));
  } else {
    const double m = 2.0 * std::sqrt(-P / 3.0);
    double arg = m == 0.0 ? 0.0 : 3.0 * R / (P * m);
    arg = std::clamp(arg, -1.0, 1.0);
    const double th = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k)
      roots.push_back(polish(m * std::cos(th - 2.0 * std::numbers::pi * k / 3.0) - shift));
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

/// Stationary mean field: long-time integration from rest, then Newton.
inline MeanFieldState steady_meanfield(const ModelParams& mp, const SteadyOptions& opt = {}) {
  if (mp.E[0] == 0.0 && mp.E[1] == 0.0) return MeanFieldState{};
  const bool linear = mp.g[0] == 0.0 && mp.g[1] == 0.0;
  if (linear) return refine_fixed_point(mp, linear_fixed_point(mp), opt.residual_tol);

  const double gmin = std::min(mp.gamma[0], mp.gamma[1]);
  const double horizon = std::min(20.0 / gmin, opt.max_seed_horizon);
  MeanFieldState seed;
  try {
    auto traj = integrate_meanfield(MeanFieldState{}, mp, horizon, 2, opt.tol);
    seed = traj.samples.back();
    seed.t = 0.0;
    return refine_fixed_point(mp, seed, opt.residual_tol);
  } catch (const NumericalError&) {
  }
  // Fallback, e.g. when the fixed point is unstable and the integration ends
  // on a limit cycle. Unidirectional: the quarter-convention photon cubics
  // are exact, take the smallest root of each. Bidirectional: iterate the
  // photon-number balance.
  if (mp.topology == Topology::unidirectional) {
    auto smallest = [](const std::vector<double>& r) {
      for (double x : r)
        if (x >= 0.0) return x;
      return 0.0;
    };
    const double N1 =
        smallest(real_roots(photon_cubic(mp, 0, mp.E[0] * mp.E[0], CubicKappaConvention::quarter)));
    const double N2 =
        smallest(real_roots(photon_cubic(mp, 1, mp.kappa * mp.kappa * N1, CubicKappaConvention::quarter)));
    const MeanFieldState s =
        fixed_point_for_positions(mp, mp.g[0] * N1 / mp.Omega[0], mp.g[1] * N2 / mp.Omega[1]);
    return refine_fixed_point(mp, s, opt.residual_tol);
  }
  MeanFieldState s = linear_fixed_point(mp);
  for (int it = 0; it < 200; ++it) {
    const double Q1 = mp.g[0] * std::norm(s.A[0]) / mp.Omega[0];
    const double Q2 = mp.g[1] * std::norm(s.A[1]) / mp.Omega[1];
    s = fixed_point_for_positions(mp, Q1, Q2);
  }
  return refine_fixed_point(mp, s, opt.residual_tol);
}

// ---------------------------------------------------------------------------
// Multistability: stationary photon-number cubics.

enum class Stability { stable, unstable };

inline const char* to_string(Stability s) { return s == Stability::stable ? "stable" : "unstable"; }


struct Branch {
  double N1 = 0, Q1 = 0, N2 = 0, Q2 = 0;
  Stability cubic_label1 = Stability::stable;  // middle root of cavity-1 cubic
  Stability cubic_label2 = Stability::stable;  // middle root of cavity-2 cubic
  Stability jacobian_label = Stability::stable;
  std::vector<cplx> eigenvalues;               // mean-field Jacobian at the branch
  double residual1 = 0, residual2 = 0;         // cubic residuals
};

struct BranchSet {
  double delta = 0;
  int cavity1_roots = 0;  // nonnegative real roots of the cavity-1 cubic
  std::vector<Branch> branches;
};

inline std::vector<cplx> eigenvalues(const Eigen::MatrixXd& M) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
  std::vector<cplx> ev(es.eigenvalues().data(), es.eigenvalues().data() + M.rows());
  std::sort(ev.begin(), ev.end(), [](cplx a, cplx b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
  });
  return ev;
}

/// Enumerates stationary photon-number branches of both cavities.
inline BranchSet multistability_branches(const ModelParams& mp,
                                         CubicKappaConvention conv = CubicKappaConvention::printed) {
  BranchSet set;
  set.delta = mp.delta;
  auto nonneg = [](std::vector<double> r) {
    std::vector<double> out;
    for (double x : r)
      if (x >= 0.0) out.push_back(x);
    return out;
  };
  const Cubic c1 = photon_cubic(mp, 0, mp.E[0] * mp.E[0], conv);
  auto n1s = nonneg(real_roots(c1));
  if (mp.E[0] == 0.0) n1s = {0.0};
  set.cavity1_roots = static_cast<int>(n1s.size());
  const cplx i{0.0, 1.0};
  for (std::size_t r1 = 0; r1 < n1s.size(); ++r1) {
    const double N1 = n1s[r1];
    const Cubic c2 = photon_cubic(mp, 1, mp.kappa * mp.kappa * N1, conv);
    auto n2s = nonneg(real_roots(c2));
    if (N1 == 0.0) n2s = {0.0};
    for (std::size_t r2 = 0; r2 < n2s.size(); ++r2) {
      Branch b;
      b.N1 = N1;
      b.N2 = n2s[r2];
      b.Q1 = mp.g[0] / mp.Omega[0] * b.N1;
      b.Q2 = mp.g[1] / mp.Omega[1] * b.N2;
      b.residual1 = c1(b.N1);
      b.residual2 = c2(b.N2);
      b.cubic_label1 = (n1s.size() == 3 && r1 == 1) ? Stability::unstable : Stability::stable;
      b.cubic_label2 = (n2s.size() == 3 && r2 == 1) ? Stability::unstable : Stability::stable;
      MeanFieldState s;
      s.Q = {b.Q1, b.Q2};
      const double kc = 0.5 * mp.kappa;
      s.A[0] = mp.E[0] / (kc + i * s.detuning(mp, 0));
      s.A[1] = -mp.kappa * s.A[0] / (kc + i * s.detuning(mp, 1));
      ModelParams uni = mp;
      uni.topology = Topology::unidirectional;
      b.eigenvalues = eigenvalues(meanfield_jacobian(s, uni));
      b.jacobian_label = b.eigenvalues.front().real() < 0.0 ? Stability::stable : Stability::unstable;
      set.branches.push_back(std::move(b));
    }
  }
  return set;
}

}  // namespace cascopt
