#pragma once

// Self-induced oscillations: cavity response to prescribed mirror limit
// cycles Q_j(t) = Qbar_j + alpha_j cos(Omega_j t) and the power balance
// P_rad / P_fric that decides which cycles are self-sustained.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "cascopt/diagnostics.hpp"
#include "cascopt/effective.hpp"
#include "cascopt/errors.hpp"
#include "cascopt/meanfield.hpp"
#include "cascopt/parallel.hpp"
#include "cascopt/params.hpp"

namespace cascopt {

/// J_n(x) for any integer n and real x.
inline double bessel_j(int n, double x) {
  double sign = 1.0;
  if (n < 0) {
    n = -n;
    if (n % 2) sign = -sign;
  }
  if (x < 0) {
    x = -x;
    if (n % 2) sign = -sign;
  }
  return sign * std::cyl_bessel_j(static_cast<double>(n), x);
}

/// Smallest n > |x| with (|x|/2)^n / n! < tol, a bound on |J_n(x)|.
inline int bessel_truncation(double x, double tol = 1e-12) {
  const double h = 0.5 * std::abs(x);
  double term = 1.0;
  int n = 0;
  while (true) {
    ++n;
    term *= h / n;
    if (n > 2 * h && term < tol) return n;
  }
}

// One spectral line nu of a cavity amplitude, A(t) = exp(i phi(t)) sum c exp(i nu t).
struct SpectralLine {
  double nu;
  cplx c;
};

struct BesselAmplitudes {
  std::array<double, 2> Qbar{0.0, 0.0};
  std::array<double, 2> alpha{0.0, 0.0};
  int n_max = 0;
  bool truncated = false;        // tail bound not met at n_max
  std::vector<cplx> A1;          // A1^n at index n + n_max
  std::vector<SpectralLine> A2;  // A2^{nml} summed over equal frequencies

  cplx A1n(int n) const { return std::abs(n) <= n_max ? A1[static_cast<std::size_t>(n + n_max)] : cplx{}; }
};

namespace detail {

inline std::vector<SpectralLine> merge_lines(std::vector<SpectralLine> v) {
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.nu < b.nu; });
  std::vector<SpectralLine> out;
  for (const auto& l : v) {
    if (!out.empty() && std::abs(l.nu - out.back().nu) <= 1e-9 * std::max(1.0, std::abs(l.nu)))
      out.back().c += l.c;
    else
      out.push_back(l);
  }
  return out;
}

// Line coefficients of cavity 2 before the cavity-2 susceptibility, which is
// the only factor that depends on Qbar2.
inline std::vector<SpectralLine> cavity2_sources(const ModelParams& mp, const BesselAmplitudes& b) {
  const double x1 = mp.g[0] * b.alpha[0] / mp.Omega[0];
  const double x2 = mp.g[1] * b.alpha[1] / mp.Omega[1];
  const int N = b.n_max;
  std::vector<double> Jm1(2 * N + 1), Jm2(2 * N + 1), Jp1(2 * N + 1);
  for (int k = -N; k <= N; ++k) {
    Jm1[k + N] = bessel_j(k, -x1);
    Jm2[k + N] = bessel_j(k, -x2);
    Jp1[k + N] = bessel_j(k, x1);
  }
  std::vector<SpectralLine> raw;
  for (int n = -N; n <= N; ++n) {
    const cplx a1 = b.A1n(n);
    if (a1 == cplx{}) continue;
    for (int l = -N; l <= N; ++l) {
      if (Jp1[l + N] == 0.0) continue;
      for (int m = -N; m <= N; ++m) {
        if (Jm2[m + N] == 0.0) continue;
        const double nu = mp.Omega[0] * (n + l) + mp.Omega[1] * m;
        raw.push_back({nu, -mp.kappa * a1 * Jp1[l + N] * Jm2[m + N]});
      }
    }
  }
  return merge_lines(std::move(raw));
}

}  // namespace detail

/// Fourier coefficients of the cavity amplitudes for prescribed cycles.
/// n_max < 0 picks the tail-bound truncation from the Bessel arguments.
inline BesselAmplitudes bessel_amplitudes(const ModelParams& mp, std::array<double, 2> Qbar,
                                          std::array<double, 2> alpha, int n_max = -1,
                                          bool with_cavity2 = true) {
  BesselAmplitudes b;
  b.Qbar = Qbar;
  b.alpha = alpha;
  const double x1 = mp.g[0] * alpha[0] / mp.Omega[0];
  const double x2 = mp.g[1] * alpha[1] / mp.Omega[1];
  const int need = std::max(bessel_truncation(x1), bessel_truncation(x2));
  b.n_max = n_max < 0 ? need : n_max;
  if (b.n_max < need) {
    b.truncated = true;
    warn("bessel_amplitudes: n_max = " + std::to_string(b.n_max) + " misses the 1e-12 tail bound (needs " +
         std::to_string(need) + ")");
  }
  const double D1 = mp.delta - mp.g[0] * Qbar[0];
  const double D2 = mp.delta - mp.g[1] * Qbar[1];
  for (int n = -b.n_max; n <= b.n_max; ++n)
    b.A1.push_back(bessel_j(n, -x1) * optical_susceptibility(-mp.Omega[0] * n, mp.kappa, D1) * mp.E[0]);
  if (with_cavity2) {
    b.A2 = detail::cavity2_sources(mp, b);
    for (auto& l : b.A2) l.c *= optical_susceptibility(-l.nu, mp.kappa, D2);
  }
  return b;
}

/// Series value of A_j(t).
inline cplx series_amplitude(const ModelParams& mp, const BesselAmplitudes& b, int j, double t) {
  const cplx i{0.0, 1.0};
  const double phase = mp.g[j] * b.alpha[j] * std::sin(mp.Omega[j] * t) / mp.Omega[j];
  cplx acc{};
  if (j == 0) {
    for (int n = -b.n_max; n <= b.n_max; ++n) acc += b.A1n(n) * std::exp(i * (mp.Omega[0] * n * t));
  } else {
    for (const auto& l : b.A2) acc += l.c * std::exp(i * l.nu * t);
  }
  return std::exp(i * phase) * acc;
}

namespace detail {

inline std::vector<SpectralLine> cavity1_lines(const ModelParams& mp, const BesselAmplitudes& b) {
  std::vector<SpectralLine> v;
  for (int n = -b.n_max; n <= b.n_max; ++n) v.push_back({mp.Omega[0] * n, b.A1n(n)});
  return v;
}

// <|A|^2> and <|A|^2 sin(W t)> from frequency-sorted lines.
inline std::array<double, 2> photon_moments(const std::vector<SpectralLine>& lines, double W) {
  double mean = 0.0;
  cplx S{};
  for (const auto& l : lines) mean += std::norm(l.c);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const double target = lines[k].nu + W;
    const double tol = 1e-9 * std::max(1.0, std::abs(target));
    auto it = std::lower_bound(lines.begin() + static_cast<std::ptrdiff_t>(k), lines.end(), target - tol,
                               [](const SpectralLine& a, double v) { return a.nu < v; });
    if (it != lines.end() && std::abs(it->nu - target) <= tol) S += lines[k].c * std::conj(it->c);
  }
  // |A|^2 = sum c_a c_b^* e^{i(nu_a - nu_b)t}; the sin(W t) average picks
  // nu_b = nu_a + W with weight -1/(2i) plus its conjugate.
  return {mean, S.imag()};
}

// Smallest root of W Q = g <|A|^2>(Q) by scanning then bisection.
template <class Photons>
double solve_static_shift(double W, double g, Photons&& photons) {
  if (g == 0.0) return 0.0;
  auto f = [&](double Q) { return W * Q - g * photons(Q); };
  double lo = 0.0, flo = f(lo);
  if (flo >= 0.0) return 0.0;
  // Shifting Q can pull the cavity onto resonance, so photons(0) is no bound.
  // Photon numbers are bounded, hence doubling reaches f > 0.
  double Qmax = std::max(1.0, g * photons(0.0) / W);
  for (int k = 0; k < 200 && f(Qmax) < 0.0; ++k) Qmax *= 2;
  if (f(Qmax) < 0.0) throw NotConverged("static shift: no root of the radiation-pressure balance");
  // Fine scan for the first sign change, i.e. the smallest root.
  const int steps = 1000;
  double hi = Qmax;
  for (int k = 1; k <= steps; ++k) {
    hi = Qmax * k / steps;
    if (f(hi) >= 0.0) break;
    lo = hi;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Cycle amplitudes with self-consistent static shifts Omega_j Qbar_j = g_j <|A_j|^2>.
inline BesselAmplitudes limit_cycle_amplitudes(const ModelParams& mp, std::array<double, 2> alpha,
                                               int n_max = -1) {
  std::array<double, 2> Qbar{0.0, 0.0};
  {
    const double x1 = mp.g[0] * alpha[0] / mp.Omega[0];
    const int N = n_max < 0 ? bessel_truncation(x1) : n_max;
    std::vector<double> J;
    for (int n = -N; n <= N; ++n) J.push_back(bessel_j(n, -x1) * mp.E[0]);
    Qbar[0] = detail::solve_static_shift(mp.Omega[0], mp.g[0], [&](double Q) {
      const double D1 = mp.delta - mp.g[0] * Q;
      double acc = 0.0;
      for (int n = -N; n <= N; ++n)
        acc += J[n + N] * J[n + N] * std::norm(optical_susceptibility(-mp.Omega[0] * n, mp.kappa, D1));
      return acc;
    });
  }
  BesselAmplitudes base = bessel_amplitudes(mp, {Qbar[0], 0.0}, alpha, n_max, false);
  const std::vector<SpectralLine> src = detail::cavity2_sources(mp, base);
  auto lines2 = [&](double Q2) {
    std::vector<SpectralLine> v = src;
    const double D2 = mp.delta - mp.g[1] * Q2;
    for (auto& l : v) l.c *= optical_susceptibility(-l.nu, mp.kappa, D2);
    return v;
  };
  Qbar[1] = detail::solve_static_shift(mp.Omega[1], mp.g[1], [&](double Q) {
    return detail::photon_moments(lines2(Q), mp.Omega[1])[0];
  });
  base.Qbar = Qbar;
  base.A2 = lines2(Qbar[1]);
  return base;
}

/// P_rad / P_fric for mirror j given the cycle amplitudes, with
/// P_rad = g <|A|^2 dQ/dt> and P_fric = (gamma / Omega) <dQ/dt^2>, the
/// dissipated power of the mean-field equations.
inline double power_ratio(const ModelParams& mp, const BesselAmplitudes& b, int j) {
  const double W = mp.Omega[j];
  const double a = b.alpha[j];
  const auto lines = j == 0 ? detail::cavity1_lines(mp, b) : b.A2;
  const double sin_avg = detail::photon_moments(lines, W)[1];
  const double prad = -mp.g[j] * a * W * sin_avg;
  const double pfric = mp.gamma[j] * a * a * W * 0.5;
  return prad / pfric;
}

/// Small-amplitude limit of the ratio, -2 Gamma_eff / gamma at the static state.
inline double power_ratio_linear(const ModelParams& mp, const BesselAmplitudes& b, int j) {
  MeanFieldState s;
  s.Q = b.Qbar;
  s.A[0] = b.A1n(0);
  cplx a2{};
  for (const auto& l : b.A2)
    if (std::abs(l.nu) < 1e-12) a2 += l.c;
  s.A[1] = a2;
  const EffectiveParams ep = effective_rates(mp, s);
  return -2.0 * ep.Gamma_eff[j] / mp.gamma[j];
}

/// Ratio for mirror j at cycle amplitudes alpha (alpha_j = 0 gives the limit).
inline double power_balance(const ModelParams& mp, std::array<double, 2> alpha, int j,
                            bool* truncated = nullptr) {
  const BesselAmplitudes b = limit_cycle_amplitudes(mp, alpha);
  if (truncated) *truncated = b.truncated;
  if (mp.g[j] == 0.0) return 0.0;
  if (alpha[j] == 0.0) return power_ratio_linear(mp, b, j);
  return power_ratio(mp, b, j);
}

// ---------------------------------------------------------------------------

struct ContourSegment {
  std::array<double, 2> a;  // (alpha, Delta)
  std::array<double, 2> b;
};

struct StabilityMap {
  std::vector<double> alpha;
  std::vector<double> delta;
  double alpha1_fixed = 0.0;  // mirror-1 amplitude used for the mirror-2 map
  // ratio[j][i * delta.size() + k] at alpha[i], delta[k]
  std::array<std::vector<double>, 2> ratio;
  std::array<std::vector<ContourSegment>, 2> contour;
  std::vector<std::string> warnings;

  double at(int j, std::size_t i, std::size_t k) const { return ratio[j][i * delta.size() + k]; }
};

/// Level-set segments of f(alpha, delta) = level on a rectilinear grid by
/// marching squares. Saddle cells are split by the cell-centre average.
inline std::vector<ContourSegment> marching_squares(const std::vector<double>& x,
                                                    const std::vector<double>& y,
                                                    const std::vector<double>& f, double level) {
  std::vector<ContourSegment> out;
  const std::size_t ny = y.size();
  auto val = [&](std::size_t i, std::size_t k) { return f[i * ny + k] - level; };
  auto lerp = [&](std::array<double, 2> p, std::array<double, 2> q, double fp, double fq) {
    const double t = fp / (fp - fq);
    return std::array<double, 2>{p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])};
  };
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    for (std::size_t k = 0; k + 1 < ny; ++k) {
      const std::array<std::array<double, 2>, 4> P{{{x[i], y[k]}, {x[i + 1], y[k]},
                                                    {x[i + 1], y[k + 1]}, {x[i], y[k + 1]}}};
      const std::array<double, 4> v{val(i, k), val(i + 1, k), val(i + 1, k + 1), val(i, k + 1)};
      if (!std::all_of(v.begin(), v.end(), [](double z) { return std::isfinite(z); })) continue;
      std::vector<std::array<double, 2>> pts;
      for (int e = 0; e < 4; ++e) {
        const int e2 = (e + 1) % 4;
        if ((v[e] < 0) != (v[e2] < 0)) pts.push_back(lerp(P[e], P[e2], v[e], v[e2]));
      }
      if (pts.size() == 2) {
        out.push_back({pts[0], pts[1]});
      } else if (pts.size() == 4) {
        const double centre = 0.25 * (v[0] + v[1] + v[2] + v[3]);
        // Edges ordered 01, 12, 23, 30; pair them so the centre's side stays connected.
        if ((centre < 0) == (v[0] < 0)) {
          out.push_back({pts[0], pts[1]});
          out.push_back({pts[2], pts[3]});
        } else {
          out.push_back({pts[0], pts[3]});
          out.push_back({pts[1], pts[2]});
        }
      }
    }
  }
  return out;
}

/// Power-balance ratios of both mirrors over (alpha, Delta). Mirror 1 uses
/// alpha_1 = alpha with mirror 2 at rest; mirror 2 uses alpha_2 = alpha with
/// alpha_1 fixed.
inline StabilityMap stability_map(const ModelParams& mp, const std::vector<double>& alpha,
                                  const std::vector<double>& delta, double alpha1_fixed = 0.0,
                                  unsigned threads = 1) {
  StabilityMap m;
  m.alpha = alpha;
  m.delta = delta;
  m.alpha1_fixed = alpha1_fixed;
  const std::size_t n = alpha.size() * delta.size();
  for (auto& r : m.ratio) r.assign(n, 0.0);
  std::vector<char> trunc(2 * n, 0);
  parallel_for(n, threads, [&](std::size_t c) {
    ModelParams p = mp;
    p.delta = delta[c % delta.size()];
    const double a = alpha[c / delta.size()];
    bool t0 = false, t1 = false;
    m.ratio[0][c] = power_balance(p, {a, 0.0}, 0, &t0);
    m.ratio[1][c] = power_balance(p, {alpha1_fixed, a}, 1, &t1);
    trunc[2 * c] = t0;
    trunc[2 * c + 1] = t1;
  });
  for (std::size_t c = 0; c < n; ++c)
    for (int j = 0; j < 2; ++j)
      if (trunc[2 * c + j])
        m.warnings.push_back("mirror " + std::to_string(j + 1) + " truncated at alpha=" +
                             std::to_string(alpha[c / delta.size()]) +
                             " delta=" + std::to_string(delta[c % delta.size()]));
  for (int j = 0; j < 2; ++j) m.contour[j] = marching_squares(alpha, delta, m.ratio[j], 1.0);
  return m;
}

}  // namespace cascopt
