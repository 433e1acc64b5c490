#pragma once

// Dense Lyapunov and symplectic-spectrum helpers shared by the full and the
// reduced covariance models.

#include <algorithm>
#include <complex>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "cascopt/errors.hpp"

namespace cascopt {

template <class Derived>
std::vector<std::complex<double>> unstable_eigenvalues(const Eigen::MatrixBase<Derived>& S) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  std::vector<std::complex<double>> out;
  const Eigen::MatrixXcd Sc = Mat(S).template cast<std::complex<double>>();
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(Sc, false);
  // Eigenvalues within roundoff of the imaginary axis count as marginal.
  const double margin = 64 * std::numeric_limits<double>::epsilon() * Sc.norm();
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
    if (es.eigenvalues()[k].real() >= -margin) out.push_back(es.eigenvalues()[k]);
  return out;
}

/// Solves S X + X S^H + N = 0 for X by vectorisation,
/// (I kron S + conj(S) kron I) vec(X) = -vec(N). Throws NotHurwitz when S has
/// an eigenvalue with nonnegative real part (up to roundoff).
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> solve_lyapunov(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& S,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& N) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = S.rows();
  if (auto bad = unstable_eigenvalues(S); !bad.empty()) throw NotHurwitz(std::move(bad));

  Mat K = Mat::Zero(n * n, n * n);
  const Mat Sc = S.conjugate();
  for (Eigen::Index j = 0; j < n; ++j)
    K.block(j * n, j * n, n, n) += S;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index l = 0; l < n; ++l)
      if (Sc(j, l) != Scalar(0))
        K.block(j * n, l * n, n, n).diagonal().array() += Sc(j, l);

  Vec rhs = -Eigen::Map<const Vec>(N.data(), n * n);
  Eigen::PartialPivLU<Mat> lu(K);
  Vec x = lu.solve(rhs);
  // One step of iterative refinement.
  x += lu.solve(rhs - K * x);
  Mat X = Eigen::Map<Mat>(x.data(), n, n);
  return (X + X.adjoint()) / Scalar(2);
}

inline double lyapunov_residual(const Eigen::MatrixXd& S, const Eigen::MatrixXd& C,
                                const Eigen::MatrixXd& N) {
  return (S * C + C * S.transpose() + N).norm();
}

/// Symplectic form for n modes ordered (q_1, p_1, q_2, p_2, ...).
inline Eigen::MatrixXd symplectic_form(Eigen::Index modes) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * modes, 2 * modes);
  for (Eigen::Index k = 0; k < modes; ++k) {
    J(2 * k, 2 * k + 1) = 1.0;
    J(2 * k + 1, 2 * k) = -1.0;
  }
  return J;
}

/// Symplectic eigenvalues (ascending) of a real covariance matrix in
/// (q, p)-pair ordering: moduli of the eigenvalues of i J C.
inline std::vector<double> symplectic_eigenvalues(const Eigen::MatrixXd& C) {
  const Eigen::Index modes = C.rows() / 2;
  Eigen::MatrixXd JC = symplectic_form(modes) * C;
  Eigen::EigenSolver<Eigen::MatrixXd> es(JC, false);
  std::vector<double> mags;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
    mags.push_back(std::abs(es.eigenvalues()[k]));
  std::sort(mags.begin(), mags.end());
  std::vector<double> nu;
  for (std::size_t k = 0; k + 1 < mags.size(); k += 2) nu.push_back(0.5 * (mags[k] + mags[k + 1]));
  return nu;
}

inline double min_symplectic_eigenvalue(const Eigen::MatrixXd& C) {
  return symplectic_eigenvalues(C).front();
}

}  // namespace cascopt
