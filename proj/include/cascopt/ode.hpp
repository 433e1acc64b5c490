#pragma once

// Dormand-Prince 5(4) integrator with embedded error control and the
// standard fourth-order continuous extension for dense output.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cascopt/errors.hpp"

namespace cascopt {

struct Tolerances {
  double rtol = 1e-9;
  double atol = 1e-12;
};

struct OdeOptions {
  Tolerances tol{};
  double initial_step = 0.0;  // 0 picks one automatically
  double max_step = 0.0;      // 0 means unbounded
  long max_steps = 100'000'000;
};

struct OdeStats {
  long accepted = 0;
  long rejected = 0;
  long evaluations = 0;
};

namespace detail {

struct Dopri5Tableau {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113,
                          a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                          a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                          e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432.0,
                          d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0,
                          d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0,
                          d7 = 69997945.0 / 29380423.0;
};

inline double error_norm(const Eigen::VectorXd& err, const Eigen::VectorXd& y0,
                         const Eigen::VectorXd& y1, const Tolerances& tol) {
  const auto n = err.size();
  if (n == 0) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sc = tol.atol + tol.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = err[i] / sc;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(n));
}

}  // namespace detail

/// Integrates y' = f(t, y) from t0 and returns the state at every entry of
/// `sample_times` (nondecreasing, all >= t0). `f` has signature
/// void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt).
/// `post_step(y)` runs after each accepted step and returns true if it
/// modified y (the stored derivative is then recomputed).
template <class Rhs, class PostStep>
std::vector<Eigen::VectorXd> integrate_dense(Rhs&& f, Eigen::VectorXd y,
                                             double t0,
                                             std::span<const double> sample_times,
                                             const OdeOptions& opt,
                                             PostStep&& post_step,
                                             OdeStats* stats = nullptr) {
  using T = detail::Dopri5Tableau;
  const auto n = y.size();
  std::vector<Eigen::VectorXd> out;
  out.reserve(sample_times.size());
  if (sample_times.empty()) return out;
  if (!(opt.tol.rtol > 0.0) || !(opt.tol.atol > 0.0))
    throw ParameterError("tolerances", "rtol and atol must be positive");
  if (!std::is_sorted(sample_times.begin(), sample_times.end()) ||
      sample_times.front() < t0)
    throw ParameterError("sample_times", "must be nondecreasing and >= t0");

  OdeStats local;
  OdeStats& st = stats ? *stats : local;

  double t = t0;
  std::size_t next = 0;
  while (next < sample_times.size() && sample_times[next] == t0) {
    out.push_back(y);
    ++next;
  }
  const double t_end = sample_times.back();
  if (next == sample_times.size()) return out;

  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n),
      ynew(n), err(n);
  f(t, y, k1);
  ++st.evaluations;

  double h = opt.initial_step;
  if (h <= 0.0) {
    // Hairer's starting-step heuristic.
    Eigen::VectorXd sc = (opt.tol.atol + opt.tol.rtol * y.array().abs()).matrix();
    const double d0 = std::sqrt((y.array() / sc.array()).square().mean());
    const double d1 = std::sqrt((k1.array() / sc.array()).square().mean());
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, t_end - t);
    ytmp = y + h0 * k1;
    f(t + h0, ytmp, k2);
    ++st.evaluations;
    const double d2 =
        std::sqrt((((k2 - k1).array() / sc.array()).square()).mean()) / h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                  : std::pow(0.01 / dm, 1.0 / 5.0);
    h = std::min(100 * h0, h1);
  }
  if (opt.max_step > 0.0) h = std::min(h, opt.max_step);

  while (next < sample_times.size()) {
    if (st.accepted + st.rejected >= opt.max_steps) throw StepSizeUnderflow(t);
    const double h_min = 1e-14 * std::max(1.0, std::abs(t));
    if (h < h_min) throw StepSizeUnderflow(t);
    if (t + h > t_end) h = t_end - t;

    ytmp = y + h * (T::a21 * k1);
    f(t + T::c2 * h, ytmp, k2);
    ytmp = y + h * (T::a31 * k1 + T::a32 * k2);
    f(t + T::c3 * h, ytmp, k3);
    ytmp = y + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3);
    f(t + T::c4 * h, ytmp, k4);
    ytmp = y + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4);
    f(t + T::c5 * h, ytmp, k5);
    ytmp = y + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 +
                    T::a65 * k5);
    f(t + h, ytmp, k6);
    ynew = y + h * (T::a71 * k1 + T::a73 * k3 + T::a74 * k4 + T::a75 * k5 +
                    T::a76 * k6);
    f(t + h, ynew, k7);
    st.evaluations += 6;

    err = h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 +
               T::e6 * k6 + T::e7 * k7);
    double en = detail::error_norm(err, y, ynew, opt.tol);
    if (!std::isfinite(en) || !ynew.allFinite()) en = 1e10;

    if (en > 1.0) {
      ++st.rejected;
      h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
      continue;
    }
    ++st.accepted;
    const double t_new = (t + h >= t_end) ? t_end : t + h;

    // Dense output on [t, t_new].
    while (next < sample_times.size() && sample_times[next] <= t_new) {
      const double theta = (sample_times[next] - t) / h;
      const double th1 = 1.0 - theta;
      Eigen::VectorXd ydiff = ynew - y;
      Eigen::VectorXd bspl = h * k1 - ydiff;
      Eigen::VectorXd r4 = ydiff - h * k7 - bspl;
      Eigen::VectorXd r5 = h * (T::d1 * k1 + T::d3 * k3 + T::d4 * k4 +
                                T::d5 * k5 + T::d6 * k6 + T::d7 * k7);
      out.push_back(y + theta * (ydiff + th1 * (bspl + theta * (r4 + th1 * r5))));
      ++next;
    }

    y = ynew;
    t = t_new;
    if (post_step(y)) {
      f(t, y, k1);
      ++st.evaluations;
    } else {
      k1 = k7;
    }

    double fac = en == 0.0 ? 5.0 : 0.9 * std::pow(en, -0.2);
    h *= std::clamp(fac, 0.2, 5.0);
    if (opt.max_step > 0.0) h = std::min(h, opt.max_step);
  }
  return out;
}

template <class Rhs>
std::vector<Eigen::VectorXd> integrate_dense(Rhs&& f, Eigen::VectorXd y,
                                             double t0,
                                             std::span<const double> sample_times,
                                             const OdeOptions& opt,
                                             OdeStats* stats = nullptr) {
  return integrate_dense(std::forward<Rhs>(f), std::move(y), t0, sample_times,
                         opt, [](Eigen::VectorXd&) { return false; }, stats);
}

/// Evenly spaced sample times t0, ..., t_end (n >= 2 points).
inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = b;
    return v;
  }
  for (std::size_t i = 0; i < n; ++i)
    v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  v.back() = b;
  return v;
}

}  // namespace cascopt
