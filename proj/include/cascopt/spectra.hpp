#pragma once

// Mechanical position spectra, the guide output spectrum and Lorentzian
// peak models. Frequencies in units of Omega1, symmetrised two-sided
// spectra normalised so that the integral over d omega / 2 pi is the variance.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <unsupported/Eigen/NonLinearOptimization>

#include "cascopt/diagnostics.hpp"
#include "cascopt/effective.hpp"
#include "cascopt/errors.hpp"
#include "cascopt/meanfield.hpp"
#include "cascopt/params.hpp"

namespace cascopt {

enum class SpectrumKind { position_1, position_2, output };

inline const char* to_string(SpectrumKind k) {
  switch (k) {
    case SpectrumKind::position_1: return "position_1";
    case SpectrumKind::position_2: return "position_2";
    default: return "output";
  }
}

// Sign in front of the kappa^2 |Lambda|^2 term of the mirror-2 spectrum.
// The two baths are independent, so the derived form adds the relayed noise;
// the printed form subtracts it.
enum class Mirror2Form { derived, printed };

inline const char* to_string(Mirror2Form f) {
  return f == Mirror2Form::derived ? "derived" : "printed";
}

enum class ReadoutForm { derived, printed };

inline const char* to_string(ReadoutForm f) {
  return f == ReadoutForm::derived ? "derived" : "printed";
}

struct Spectrum {
  std::vector<double> omega;
  std::vector<double> values;
  SpectrumKind kind = SpectrumKind::position_1;
  Mirror2Form form = Mirror2Form::derived;
  ReadoutForm readout = ReadoutForm::derived;
  ModelParams params;
};

inline std::vector<double> default_grid(const ModelParams& mp, std::size_t n = 1u << 14) {
  const double w = std::max(mp.Omega[0], mp.Omega[1]);
  return linspace(0.2 * w, 1.8 * w, n);
}

inline cplx mechanical_susceptibility(double omega, double Omega, double gamma) {
  return Omega / cplx(Omega * Omega - omega * omega, -omega * gamma);
}

inline cplx effective_mech_susceptibility(double omega, const ModelParams& mp,
                                          const MeanFieldState& s, int j) {
  const cplx i{0.0, 1.0};
  const double D = s.detuning(mp, j);
  const cplx chi = mechanical_susceptibility(omega, mp.Omega[j], mp.gamma[j]);
  const cplx diff = optical_susceptibility(omega, mp.kappa, D) -
                    std::conj(optical_susceptibility(-omega, mp.kappa, D));
  cplx den = 1.0 - i * std::norm(s.coupling(mp, j)) * chi * diff;
  if (std::abs(den) < 1e-300) den = 1e-300;
  return chi / den;
}

inline double position_spectrum_at(double omega, int mirror, const ModelParams& mp,
                                   const MeanFieldState& s, Mirror2Form form = Mirror2Form::derived) {
  const double S1 = mp.gamma[0] * (2 * mp.nbar[0] + 1) *
                    std::norm(effective_mech_susceptibility(omega, mp, s, 0));
  if (mirror == 0) return S1;
  const double x2 = std::norm(effective_mech_susceptibility(omega, mp, s, 1));
  const double relay = mp.kappa * mp.kappa * S1 * x2 * std::norm(cascaded_coupling(omega, mp, s));
  const double own = mp.gamma[1] * (2 * mp.nbar[1] + 1) * x2;
  return form == Mirror2Form::derived ? own + relay : own - relay;
}

inline void check_nonnegative(const Spectrum& sp) {
  for (std::size_t k = 0; k < sp.values.size(); ++k)
    if (sp.values[k] < -1e-12)
      throw NegativeSpectrum(std::string(to_string(sp.kind)) + " spectrum negative (" +
                             std::to_string(sp.values[k]) + ") at omega = " +
                             std::to_string(sp.omega[k]) + " with the " + to_string(sp.form) +
                             " mirror-2 form");
}

inline Spectrum position_spectrum(int mirror, const ModelParams& mp, const MeanFieldState& s,
                                  const std::vector<double>& grid,
                                  Mirror2Form form = Mirror2Form::derived) {
  Spectrum sp;
  sp.omega = grid;
  sp.kind = mirror == 0 ? SpectrumKind::position_1 : SpectrumKind::position_2;
  sp.form = form;
  sp.params = mp;
  sp.values.reserve(grid.size());
  for (double w : grid) sp.values.push_back(position_spectrum_at(w, mirror, mp, s, form));
  check_nonnegative(sp);
  return sp;
}

// Homodyne weight of mirror j in the output quadrature. The printed weight
// is kappa |G_j chi_aj(w) - G_j^* chi_aj^*(-w)|^2 / 2. Mirror 1's light also
// passes cavity 2 on its way out, which multiplies its field response by
// 1 - kappa chi_a2(w); the derived weight keeps that factor.
inline double readout_weight(double omega, int j, const ModelParams& mp, const MeanFieldState& s,
                             ReadoutForm form = ReadoutForm::derived) {
  const cplx G = s.coupling(mp, j);
  const double D = s.detuning(mp, j);
  cplx up = G * optical_susceptibility(omega, mp.kappa, D);
  cplx dn = G * optical_susceptibility(-omega, mp.kappa, D);
  if (j == 0 && form == ReadoutForm::derived && mp.topology == Topology::unidirectional) {
    const double D2 = s.detuning(mp, 1);
    up *= 1.0 - mp.kappa * optical_susceptibility(omega, mp.kappa, D2);
    dn *= 1.0 - mp.kappa * optical_susceptibility(-omega, mp.kappa, D2);
  }
  return 0.5 * mp.kappa * std::norm(up - std::conj(dn));
}

inline Spectrum output_spectrum(const ModelParams& mp, const MeanFieldState& s,
                                const std::vector<double>& grid,
                                Mirror2Form form = Mirror2Form::derived,
                                ReadoutForm readout = ReadoutForm::derived) {
  Spectrum sp;
  sp.omega = grid;
  sp.kind = SpectrumKind::output;
  sp.form = form;
  sp.readout = readout;
  sp.params = mp;
  sp.values.reserve(grid.size());
  for (double w : grid) {
    sp.values.push_back(readout_weight(w, 0, mp, s, readout) * position_spectrum_at(w, 0, mp, s, form) +
                        readout_weight(w, 1, mp, s, readout) * position_spectrum_at(w, 1, mp, s, form));
  }
  check_nonnegative(sp);
  return sp;
}

/// Trapezoid estimate of the integral over d omega / 2 pi.
inline double integrate_spectrum(const std::vector<double>& omega, const std::vector<double>& v) {
  double acc = 0.0;
  for (std::size_t k = 1; k < omega.size(); ++k)
    acc += 0.5 * (v[k] + v[k - 1]) * (omega[k] - omega[k - 1]);
  return acc / (2 * std::numbers::pi);
}

// ---------------------------------------------------------------------------
// Lorentzian peaks: amplitude / ((center^2 - w^2)^2 + width^2 w^2).

struct LorentzianFit {
  double center = 1.0;
  double width = 0.0;
  double amplitude = 0.0;
  double residual = 0.0;  // rms relative residual over the fitted points
  bool multi_peak = false;

  double operator()(double omega) const {
    const double a = center * center - omega * omega;
    return amplitude / (a * a + width * width * omega * omega);
  }
};

/// Indices of local maxima rising above rel_floor * max.
inline std::vector<std::size_t> find_peaks(const std::vector<double>& v, double rel_floor = 1e-3) {
  std::vector<std::size_t> out;
  if (v.size() < 3) return out;
  const double top = *std::max_element(v.begin(), v.end());
  for (std::size_t k = 1; k + 1 < v.size(); ++k)
    if (v[k] > v[k - 1] && v[k] >= v[k + 1] && v[k] > rel_floor * top) out.push_back(k);
  return out;
}

/// Tilde frequency squared and width at frequency omega (peak model frozen
/// at omega = Omega_j in lorentzian_approx).
inline std::array<double, 2> dressed_frequency_width(double omega, int j, const ModelParams& mp,
                                                     const MeanFieldState& s) {
  const double D = s.detuning(mp, j);
  const double k2 = 0.25 * mp.kappa * mp.kappa;
  const double den = (k2 + (omega - D) * (omega - D)) * (k2 + (omega + D) * (omega + D));
  const double G2 = std::norm(s.coupling(mp, j));
  const double W = mp.Omega[j];
  const double Wt2 = W * W - G2 * 2 * D * W * (k2 + D * D - omega * omega) / den;
  const double gt = mp.gamma[j] + G2 * 2 * mp.kappa * D * W / den;
  return {Wt2, gt};
}

inline LorentzianFit lorentzian_approx(int mirror, const ModelParams& mp, const MeanFieldState& s,
                                       const std::vector<double>& grid) {
  const double W = mp.Omega[mirror];
  const auto [Wt2, gt] = dressed_frequency_width(W, mirror, mp, s);
  LorentzianFit f;
  f.center = std::sqrt(std::max(Wt2, 0.0));
  f.width = gt;
  double strength = mp.gamma[mirror] * (2 * mp.nbar[mirror] + 1);
  if (mirror == 1)
    strength += mp.kappa * mp.kappa * position_spectrum_at(W, 0, mp, s) *
                std::norm(cascaded_coupling(W, mp, s));
  f.amplitude = strength * W * W;

  std::vector<double> exact;
  exact.reserve(grid.size());
  for (double w : grid) exact.push_back(position_spectrum_at(w, mirror, mp, s));
  if (find_peaks(exact).size() >= 2) {
    f.multi_peak = true;
    warn("lorentzian_approx: spectrum of mirror " + std::to_string(mirror + 1) +
         " has two peaks in the window, the single-Lorentzian model does not apply");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double r = f(grid[k]) / exact[k] - 1.0;
    acc += r * r;
  }
  f.residual = grid.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(grid.size()));
  return f;
}

namespace detail {

// Gauss-Legendre 20 vs 40 on [a, b], bisected until they agree to abs_tol
// or to roundoff of the piece itself.
template <class F>
double adaptive_gauss(const F& f, double a, double b, double abs_tol, int depth) {
  using boost::math::quadrature::gauss;
  const double lo = gauss<double, 20>::integrate(f, a, b);
  const double hi = gauss<double, 40>::integrate(f, a, b);
  if (std::abs(hi - lo) <= std::max(abs_tol, 1e-13 * std::abs(hi)) || depth == 0) return hi;
  const double m = 0.5 * (a + b);
  return adaptive_gauss(f, a, m, 0.5 * abs_tol, depth - 1) +
         adaptive_gauss(f, m, b, 0.5 * abs_tol, depth - 1);
}

}  // namespace detail

/// <q_j^2> as 2 * integral_0^inf S^q_j d omega / 2 pi. Peaks can be as narrow
/// as gamma, so the range is cut geometrically around the bare and dressed
/// resonances (each piece no wider than its distance to the peak), then
/// refined adaptively. Exp-sinh handles the tail past 4 max(Omega).
inline double spectrum_variance(int mirror, const ModelParams& mp, const MeanFieldState& s,
                                Mirror2Form form = Mirror2Form::derived) {
  const auto S = [&](double w) { return position_spectrum_at(w, mirror, mp, s, form); };
  const double top = 4 * std::max(mp.Omega[0], mp.Omega[1]);
  std::vector<double> cuts{0.0, top};
  for (int j = 0; j < 2; ++j) {
    const auto [Wt2, gt] = dressed_frequency_width(mp.Omega[j], j, mp, s);
    const double w = 0.25 * std::max(std::abs(gt), mp.gamma[j]);
    for (double c : {mp.Omega[j], std::sqrt(std::max(Wt2, 0.0))}) {
      cuts.push_back(c);
      for (double d = w; d < top; d *= 2) {
        cuts.push_back(c - d);
        cuts.push_back(c + d);
      }
    }
  }
  std::erase_if(cuts, [&](double c) { return !(c >= 0.0 && c <= top); });
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double rough = 0.0;
  for (std::size_t k = 1; k < cuts.size(); ++k)
    rough += boost::math::quadrature::gauss<double, 20>::integrate(S, cuts[k - 1], cuts[k]);
  const double tol = 1e-10 * std::abs(rough) / static_cast<double>(cuts.size());
  double acc = 0.0;
  for (std::size_t k = 1; k < cuts.size(); ++k)
    acc += detail::adaptive_gauss(S, cuts[k - 1], cuts[k], tol, 12);
  acc += boost::math::quadrature::exp_sinh<double>().integrate(
      [&](double u) { return S(top + u); }, 0.0, std::numeric_limits<double>::infinity());
  return acc / std::numbers::pi;
}

namespace detail {

// Relative residuals of K1 L1 + K2 L2 against data. Parameters per peak:
// amplitude (scaled), center, width.
struct TwoLorentzianFunctor {
  using Scalar = double;
  const std::vector<double>& w;
  const std::vector<double>& y;
  const std::vector<double>& k1;
  const std::vector<double>& k2;
  std::array<double, 2> amp_scale;

  int inputs() const { return 6; }
  int values() const { return static_cast<int>(w.size()); }

  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
    for (std::size_t i = 0; i < w.size(); ++i) {
      double m = 0.0;
      for (int j = 0; j < 2; ++j) {
        const double a = p[3 * j] * amp_scale[j], c = p[3 * j + 1], g = p[3 * j + 2];
        const double d = c * c - w[i] * w[i];
        m += (j == 0 ? k1[i] : k2[i]) * a / (d * d + g * g * w[i] * w[i]);
      }
      r[static_cast<Eigen::Index>(i)] = m / y[i] - 1.0;
    }
    return 0;
  }

  int df(const Eigen::VectorXd& p, Eigen::MatrixXd& J) const {
    for (std::size_t i = 0; i < w.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      for (int j = 0; j < 2; ++j) {
        const double a = p[3 * j] * amp_scale[j], c = p[3 * j + 1], g = p[3 * j + 2];
        const double d = c * c - w[i] * w[i];
        const double den = d * d + g * g * w[i] * w[i];
        const double K = (j == 0 ? k1[i] : k2[i]) / y[i];
        J(ii, 3 * j) = K * amp_scale[j] / den;
        J(ii, 3 * j + 1) = -K * a * 4 * c * d / (den * den);
        J(ii, 3 * j + 2) = -K * a * 2 * g * w[i] * w[i] / (den * den);
      }
    }
    return 0;
  }
};

// Center, half-maximum width and height around peak index k.
inline std::array<double, 3> peak_shape(const std::vector<double>& w, const std::vector<double>& v,
                                        std::size_t k) {
  const double half = 0.5 * v[k];
  std::size_t lo = k, hi = k;
  while (lo > 0 && v[lo] > half) --lo;
  while (hi + 1 < v.size() && v[hi] > half) ++hi;
  return {w[k], std::max(w[hi] - w[lo], w.size() > 1 ? w[1] - w[0] : 1.0), v[k]};
}

}  // namespace detail

/// Least-squares fit of K1 L1 + K2 L2 to data on windows of +-`window`
/// half-widths around the two dominant peaks.
inline std::array<LorentzianFit, 2> fit_two_lorentzians(const std::vector<double>& omega,
                                                        const std::vector<double>& data,
                                                        const std::vector<double>& k1,
                                                        const std::vector<double>& k2,
                                                        double window = 10.0) {
  std::vector<std::size_t> idx = find_peaks(data);
  if (idx.size() < 2)
    throw UnresolvablePeaks("output spectrum shows " + std::to_string(idx.size()) +
                            " resolvable peak(s), two are needed");
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return data[a] > data[b]; });
  idx.resize(2);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return omega[a] < omega[b]; });
  std::array<std::array<double, 3>, 2> shape{detail::peak_shape(omega, data, idx[0]),
                                             detail::peak_shape(omega, data, idx[1])};
  if (shape[1][0] - shape[0][0] < 0.5 * (shape[0][1] + shape[1][1]))
    throw UnresolvablePeaks("peak separation below the sum of half-widths");

  std::vector<double> w, y, a1, a2;
  for (std::size_t i = 0; i < omega.size(); ++i) {
    bool keep = false;
    for (const auto& sh : shape) keep |= std::abs(omega[i] - sh[0]) <= window * 0.5 * sh[1];
    if (keep && data[i] > 0) {
      w.push_back(omega[i]);
      y.push_back(data[i]);
      a1.push_back(k1[i]);
      a2.push_back(k2[i]);
    }
  }
  Eigen::VectorXd p(6);
  std::array<double, 2> scale{};
  for (int j = 0; j < 2; ++j) {
    const auto& [c, width, h] = shape[j];
    const std::size_t at = idx[j];
    const double K = j == 0 ? k1[at] : k2[at];
    scale[j] = h * width * width * c * c / (K > 0 ? K : 1.0);
    p[3 * j] = 1.0;
    p[3 * j + 1] = c;
    p[3 * j + 2] = width;
  }
  detail::TwoLorentzianFunctor fn{w, y, a1, a2, scale};
  Eigen::LevenbergMarquardt<detail::TwoLorentzianFunctor> lm(fn);
  lm.parameters.xtol = 1e-14;
  lm.parameters.ftol = 1e-14;
  lm.parameters.maxfev = 20000;
  lm.minimize(p);
  Eigen::VectorXd r(static_cast<Eigen::Index>(w.size()));
  fn(p, r);
  const double rms = std::sqrt(r.squaredNorm() / static_cast<double>(std::max<std::size_t>(1, w.size())));
  std::array<LorentzianFit, 2> out;
  for (int j = 0; j < 2; ++j) {
    out[j].amplitude = p[3 * j] * scale[j];
    out[j].center = std::abs(p[3 * j + 1]);
    out[j].width = std::abs(p[3 * j + 2]);
    out[j].residual = rms;
  }
  return out;
}

/// Per-mirror Lorentzians recovered from the output spectrum, ordered by
/// mirror (the peak nearer Omega_j is assigned to mirror j).
inline std::array<LorentzianFit, 2> reconstruct_mirror_spectra(const Spectrum& out,
                                                               const ModelParams& mp,
                                                               const MeanFieldState& s) {
  std::vector<double> k1, k2;
  for (double w : out.omega) {
    k1.push_back(readout_weight(w, 0, mp, s, out.readout));
    k2.push_back(readout_weight(w, 1, mp, s, out.readout));
  }
  // Peaks come out ordered by frequency; weights must follow that order.
  const bool swapped = mp.Omega[1] < mp.Omega[0];
  auto fits = swapped ? fit_two_lorentzians(out.omega, out.values, k2, k1)
                      : fit_two_lorentzians(out.omega, out.values, k1, k2);
  if (swapped) std::swap(fits[0], fits[1]);
  return fits;
}

}  // namespace cascopt
