#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cascopt/lyapunov.hpp"
#include "cascopt/meanfield.hpp"
#include "cascopt/ode.hpp"
#include "cascopt/params.hpp"

namespace cascopt {

// Quadrature orderings used by covariance matrices.
enum class CovarianceBasis {
  full,     // q1, p1, x1, y1, q2, p2, x2, y2
  mirrors,  // q1, p1, q2, p2
};

inline std::vector<std::string> quadrature_labels(CovarianceBasis b) {
  if (b == CovarianceBasis::full) return {"q1", "p1", "x1", "y1", "q2", "p2", "x2", "y2"};
  return {"q1", "p1", "q2", "p2"};
}

// Symmetrised second moments C_ij = <u_i u_j + u_j u_i>/2, vacuum = 1/2.
struct CovarianceState {
  double t = 0.0;
  Eigen::MatrixXd C;
  CovarianceBasis basis = CovarianceBasis::full;
};

struct DriftDiffusion {
  Eigen::MatrixXd S;  // 8x8 drift
  Eigen::MatrixXd N;  // 8x8 diffusion
};

// Index of quadrature k (0..3 = q, p, x, y) of subsystem j in the full basis.
constexpr int idx(int j, int k) { return 4 * j + k; }

inline double cavity_diffusion(const ModelParams& mp) {
  const double base = mp.topology == Topology::unidirectional ? mp.kappa : 2.0 * mp.kappa;
  return mp.optical_noise == OpticalNoise::printed ? base : 0.5 * base;
}

/// Drift and diffusion of the quadrature fluctuations around the mean field.
/// With x = (a + a^+)/sqrt2 the radiation-pressure terms carry sqrt2 G_j.
inline DriftDiffusion build_drift_diffusion(const MeanFieldState& s, const ModelParams& mp) {
  DriftDiffusion dd{Eigen::MatrixXd::Zero(8, 8), Eigen::MatrixXd::Zero(8, 8)};
  auto& S = dd.S;
  auto& N = dd.N;
  const double kc = cavity_damping(mp);
  const double r2 = std::numbers::sqrt2;
  for (int j = 0; j < 2; ++j) {
    const cplx G = s.coupling(mp, j);
    const double D = s.detuning(mp, j);
    const int q = idx(j, 0), p = idx(j, 1), x = idx(j, 2), y = idx(j, 3);
    S(q, p) = mp.Omega[j];
    S(p, q) = -mp.Omega[j];
    S(p, p) = -mp.gamma[j];
    S(p, x) = r2 * G.real();
    S(p, y) = r2 * G.imag();
    S(x, q) = -r2 * G.imag();
    S(x, x) = -kc;
    S(x, y) = D;
    S(y, q) = r2 * G.real();
    S(y, x) = -D;
    S(y, y) = -kc;
    N(p, p) = mp.gamma[j] * (2 * mp.nbar[j] + 1);
  }
  S(idx(1, 2), idx(0, 2)) = -mp.kappa;
  S(idx(1, 3), idx(0, 3)) = -mp.kappa;
  if (mp.topology == Topology::bidirectional) {
    S(idx(0, 2), idx(1, 2)) = -mp.kappa;
    S(idx(0, 3), idx(1, 3)) = -mp.kappa;
  }
  const double nc = cavity_diffusion(mp);
  for (int k : {2, 3}) {
    N(idx(0, k), idx(0, k)) = nc;
    N(idx(1, k), idx(1, k)) = nc;
    N(idx(0, k), idx(1, k)) = nc;
    N(idx(1, k), idx(0, k)) = nc;
  }
  return dd;
}

/// Mirrors thermal with occupation nbar_j, cavities in vacuum.
inline CovarianceState thermal_initial_state(const ModelParams& mp) {
  CovarianceState c;
  c.C = Eigen::MatrixXd::Zero(8, 8);
  for (int j = 0; j < 2; ++j) {
    c.C(idx(j, 0), idx(j, 0)) = c.C(idx(j, 1), idx(j, 1)) = mp.nbar[j] + 0.5;
    c.C(idx(j, 2), idx(j, 2)) = c.C(idx(j, 3), idx(j, 3)) = 0.5;
  }
  return c;
}

/// Algebraic steady state of dC/dt = S C + C S^T + N.
inline CovarianceState steady_covariance(const DriftDiffusion& dd) {
  CovarianceState c;
  c.C = solve_lyapunov<double>(dd.S, dd.N);
  c.t = std::numeric_limits<double>::infinity();
  c.basis = dd.S.rows() == 8 ? CovarianceBasis::full : CovarianceBasis::mirrors;
  return c;
}

struct CovarianceTrajectory {
  std::vector<CovarianceState> samples;
  std::vector<MeanFieldState> meanfield;  // empty for a frozen drift
  std::vector<std::string> warnings;
  OdeStats stats;
};

namespace detail {

inline void symmetrize_block(Eigen::VectorXd& y, Eigen::Index offset, Eigen::Index n) {
  Eigen::Map<Eigen::MatrixXd> C(y.data() + offset, n, n);
  C = (0.5 * (C + C.transpose())).eval();
}

inline void check_physicality(CovarianceTrajectory& tr) {
  for (const auto& s : tr.samples) {
    if (s.C.rows() % 2 != 0) continue;
    const double nu = min_symplectic_eigenvalue(s.C);
    if (nu < 0.5 - 1e-6) {
      tr.warnings.push_back("physicality violation at t = " + std::to_string(s.t) +
                            ": symplectic eigenvalue " + std::to_string(nu));
    }
  }
}

}  // namespace detail

/// Covariance dynamics with a constant drift/diffusion pair.
inline CovarianceTrajectory evolve_covariance(const CovarianceState& C0, const DriftDiffusion& dd,
                                              std::span<const double> times,
                                              const Tolerances& tol = {}) {
  const Eigen::Index n = C0.C.rows();
  const Eigen::MatrixXd S = dd.S, St = dd.S.transpose(), N = dd.N;
  auto rhs = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    Eigen::Map<const Eigen::MatrixXd> C(y.data(), n, n);
    dy.resize(n * n);
    Eigen::Map<Eigen::MatrixXd> D(dy.data(), n, n);
    D.noalias() = S * C;
    D.noalias() += C * St;
    D += N;
  };
  Eigen::VectorXd y0 = Eigen::Map<const Eigen::VectorXd>(C0.C.data(), n * n);
  OdeOptions opt;
  opt.tol = tol;
  CovarianceTrajectory tr;
  auto ys = integrate_dense(rhs, y0, C0.t, times, opt,
                            [n](Eigen::VectorXd& y) {
                              detail::symmetrize_block(y, 0, n);
                              return true;
                            },
                            &tr.stats);
  for (std::size_t k = 0; k < ys.size(); ++k) {
    CovarianceState c;
    c.t = times[k];
    c.basis = C0.basis;
    c.C = Eigen::Map<Eigen::MatrixXd>(ys[k].data(), n, n);
    c.C = (0.5 * (c.C + c.C.transpose())).eval();
    tr.samples.push_back(std::move(c));
  }
  detail::check_physicality(tr);
  return tr;
}

/// Covariance dynamics along a mean-field trajectory: the mean field and the
/// 8x8 covariance are integrated together so S(t) follows the mean values.
inline CovarianceTrajectory evolve_covariance(const CovarianceState& C0, const MeanFieldState& s0,
                                              const ModelParams& mp,
                                              std::span<const double> times,
                                              const Tolerances& tol = {}) {
  constexpr Eigen::Index n = 8;
  auto rhs = [&](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    dy.resize(8 + n * n);
    const MeanFieldState s = from_vector(y.head(8), t);
    dy.head(8) = to_vector(meanfield_rhs(s, mp));
    const DriftDiffusion dd = build_drift_diffusion(s, mp);
    Eigen::Map<const Eigen::MatrixXd> C(y.data() + 8, n, n);
    Eigen::Map<Eigen::MatrixXd> D(dy.data() + 8, n, n);
    D.noalias() = dd.S * C;
    D.noalias() += C * dd.S.transpose();
    D += dd.N;
  };
  Eigen::VectorXd y0(8 + n * n);
  y0.head(8) = to_vector(s0);
  y0.tail(n * n) = Eigen::Map<const Eigen::VectorXd>(C0.C.data(), n * n);
  OdeOptions opt;
  opt.tol = tol;
  CovarianceTrajectory tr;
  auto ys = integrate_dense(rhs, y0, C0.t, times, opt,
                            [](Eigen::VectorXd& y) {
                              detail::symmetrize_block(y, 8, n);
                              return true;
                            },
                            &tr.stats);
  for (std::size_t k = 0; k < ys.size(); ++k) {
    tr.meanfield.push_back(from_vector(ys[k].head(8), times[k]));
    CovarianceState c;
    c.t = times[k];
    c.C = Eigen::Map<Eigen::MatrixXd>(ys[k].data() + 8, n, n);
    c.C = (0.5 * (c.C + c.C.transpose())).eval();
    tr.samples.push_back(std::move(c));
  }
  detail::check_physicality(tr);
  return tr;
}

/// Mirror-mirror marginal (q1, p1, q2, p2).
inline CovarianceState mirror_marginal(const CovarianceState& full) {
  if (full.basis == CovarianceBasis::mirrors) return full;
  static constexpr std::array<int, 4> sel{idx(0, 0), idx(0, 1), idx(1, 0), idx(1, 1)};
  CovarianceState m;
  m.t = full.t;
  m.basis = CovarianceBasis::mirrors;
  m.C.resize(4, 4);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) m.C(a, b) = full.C(sel[a], sel[b]);
  return m;
}

}  // namespace cascopt
