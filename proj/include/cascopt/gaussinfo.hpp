#pragma once

// Two-mode Gaussian correlation measures. Covariances use the vacuum = 1/2
// convention; entropies are in nats.

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "cascopt/diagnostics.hpp"
#include "cascopt/errors.hpp"
#include "cascopt/linearized.hpp"

namespace cascopt {

struct TwoModeGaussian {
  Eigen::Matrix2d A = Eigen::Matrix2d::Identity() * 0.5;
  Eigen::Matrix2d B = Eigen::Matrix2d::Identity() * 0.5;
  Eigen::Matrix2d D = Eigen::Matrix2d::Zero();

  Eigen::Matrix4d full() const {
    Eigen::Matrix4d C;
    C << A, D, D.transpose(), B;
    return C;
  }

  static TwoModeGaussian from_matrix(const Eigen::Matrix4d& C) {
    TwoModeGaussian g;
    g.A = C.topLeftCorner<2, 2>();
    g.B = C.bottomRightCorner<2, 2>();
    g.D = C.topRightCorner<2, 2>();
    return g;
  }

  TwoModeGaussian swapped() const {
    TwoModeGaussian g;
    g.A = B;
    g.B = A;
    g.D = D.transpose();
    return g;
  }
};

/// Mirror-mirror block (q1, p1, q2, p2) of a full or mirror-basis covariance.
inline TwoModeGaussian extract_mirror_pair(const CovarianceState& c) {
  const CovarianceState m = mirror_marginal(c);
  return TwoModeGaussian::from_matrix(m.C);
}

struct SymplecticInvariants {
  double I1, I2, I3, I4;
  double d_plus, d_minus;
};

inline SymplecticInvariants symplectic_invariants(const TwoModeGaussian& g) {
  SymplecticInvariants s{};
  s.I1 = g.A.determinant();
  s.I2 = g.B.determinant();
  s.I3 = g.D.determinant();
  s.I4 = g.full().determinant();
  const double sum = s.I1 + s.I2 + 2 * s.I3;
  double disc = sum * sum - 4 * s.I4;
  if (disc < 0) {
    if (disc < -1e-9 * sum * sum)
      throw NonPhysicalState("two-mode covariance has complex symplectic eigenvalues");
    disc = 0;
  }
  const double dp2 = 0.5 * (sum + std::sqrt(disc));
  if (!(dp2 > 0) || !(s.I4 > 0))
    throw NonPhysicalState("two-mode covariance is not positive definite");
  s.d_plus = std::sqrt(dp2);
  // d+^2 d-^2 = I4; avoids cancellation when d+ >> d-.
  s.d_minus = std::sqrt(s.I4 / dp2);
  // Degenerate d+ = d- (pure states) loses half the digits through the
  // square root of the discriminant, hence the loose bound.
  if (s.d_minus < 0.5 - 1e-6 * std::max(1.0, s.d_plus))
    throw NonPhysicalState("symplectic eigenvalue " + std::to_string(s.d_minus) + " below 1/2");
  return s;
}

/// Entropy function (x + 1/2) ln(x + 1/2) - (x - 1/2) ln(x - 1/2), f(1/2) = 0.
inline double entropy_function(double x) {
  if (x <= 0.5) return 0.0;
  // x ln((x+1/2)/(x-1/2)) + ln(x^2 - 1/4)/2, free of the cancellation
  // between the two large terms when x >> 1.
  const double b = x - 0.5;
  return x * std::log1p(1.0 / b) + 0.5 * std::log(b * (x + 0.5));
}

inline double mutual_information(const SymplecticInvariants& s) {
  const double v = entropy_function(std::sqrt(s.I1)) + entropy_function(std::sqrt(s.I2)) -
                   entropy_function(s.d_plus) - entropy_function(s.d_minus);
  return std::max(v, 0.0);
}

inline double mutual_information(const TwoModeGaussian& g) {
  return mutual_information(symplectic_invariants(g));
}

enum class DiscordDirection {
  A_given_B,  // Gaussian measurement on B
  B_given_A,  // Gaussian measurement on A
};

/// Determinant of the conditional covariance of A left by the optimal
/// Gaussian measurement on B.
inline double optimal_conditional_determinant(const SymplecticInvariants& s) {
  const double I1 = s.I1, I2 = s.I2, I3 = s.I3, I4 = s.I4;
  const bool product = std::abs(I3) < 1e-12 * std::sqrt(I1 * I2);
  const double lhs = 4 * (I1 * I2 - I4) * (I1 * I2 - I4);
  const double rhs = (I1 + 4 * I4) * (1 + 4 * I2) * I3 * I3;
  if (!product && lhs <= rhs) {
    const double num = 2 * std::abs(I3) + std::sqrt(4 * I3 * I3 + (4 * I2 - 1) * (4 * I4 - I1));
    const double w = num / (4 * I2 - 1);
    return w * w;
  }
  const double x = I1 * I2 + I4 - I3 * I3;
  // x^2 - 4 I1 I2 I4 expanded to limit cancellation.
  const double e = I1 * I2 - I4;
  double disc = e * e + I3 * I3 * I3 * I3 - 2 * I3 * I3 * (I1 * I2 + I4);
  disc = std::max(disc, 0.0);
  return (x - std::sqrt(disc)) / (2 * I2);
}

/// Unclamped closed-form discord; negative values signal roundoff.
inline double gaussian_discord_raw(const TwoModeGaussian& g, DiscordDirection dir) {
  const TwoModeGaussian h = dir == DiscordDirection::A_given_B ? g : g.swapped();
  const SymplecticInvariants s = symplectic_invariants(h);
  const double W = optimal_conditional_determinant(s);
  return entropy_function(std::sqrt(s.I2)) - entropy_function(s.d_plus) -
         entropy_function(s.d_minus) + entropy_function(std::sqrt(std::max(W, 0.25)));
}

inline double gaussian_discord(const TwoModeGaussian& g, DiscordDirection dir) {
  const double v = gaussian_discord_raw(g, dir);
  if (v < 0) {
    if (v < -1e-9) warn("gaussian_discord: clamped negative value " + std::to_string(v));
    return 0.0;
  }
  return v;
}

}  // namespace cascopt
