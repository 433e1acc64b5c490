#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "run_context.hpp"

namespace cascopt::cli {

namespace detail {

inline std::vector<double> sample_times(const RunConfig& c) {
  return linspace(0.0, c.horizon * 2 * std::numbers::pi, static_cast<std::size_t>(c.samples));
}

inline std::vector<double> delta_grid(const RunConfig& c) {
  if (c.delta_points == 1) return {c.delta_min};
  return linspace(c.delta_min, c.delta_max, static_cast<std::size_t>(c.delta_points));
}

inline double tau_units(double t) { return t / (2 * std::numbers::pi); }

inline json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json state_json(const MeanFieldState& s, const ModelParams& mp) {
  return {{"Q1", s.Q[0]},           {"P1", s.P[0]},           {"ReA1", s.A[0].real()},
          {"ImA1", s.A[0].imag()},  {"Q2", s.Q[1]},           {"P2", s.P[1]},
          {"ReA2", s.A[1].real()},  {"ImA2", s.A[1].imag()},  {"G1_over_kappa", std::abs(s.coupling(mp, 0)) / mp.kappa},
          {"G2_over_kappa", std::abs(s.coupling(mp, 1)) / mp.kappa},
          {"scaled_residual", scaled_residual(s, mp)}};
}

}  // namespace detail

inline void run_meanfield(RunContext& ctx) {
  const ModelParams mp = ctx.model();
  const auto times = detail::sample_times(ctx.cfg);
  const MeanFieldTrajectory tr = integrate_meanfield(MeanFieldState{}, mp, times, ctx.cfg.tol);
  CsvWriter csv(ctx.path("trajectory.csv"), ctx.meta(mp),
                {"t", "Q1", "P1", "ReA1", "ImA1", "Q2", "P2", "ReA2", "ImA2"});
  for (const auto& s : tr.samples)
    csv.row({s.t, s.Q[0], s.P[0], s.A[0].real(), s.A[0].imag(), s.Q[1], s.P[1], s.A[1].real(),
             s.A[1].imag()});
  const MeanFieldState fp = steady_meanfield(mp);
  json j = detail::state_json(fp, mp);
  j["terminal_distance"] = (to_vector(tr.samples.back()) - to_vector(fp)).norm();
  ctx.write_json("fixed_point.json", j);
  ctx.extra = {{"fixed_point", j}, {"steps", tr.stats.accepted}};
}

inline void run_covariance(RunContext& ctx) {
  const ModelParams mp = ctx.model();
  const MeanFieldState s = steady_meanfield(mp);
  const auto times = detail::sample_times(ctx.cfg);
  const CovarianceTrajectory tr =
      evolve_covariance(thermal_initial_state(mp), s, mp, times, ctx.cfg.tol);
  for (const auto& w : tr.warnings) ctx.warnings.push_back(w);
  CsvWriter csv(ctx.path("correlations.csv"), ctx.meta(mp),
                {"t_tau", "n_eff1", "n_eff2", "mutual_information", "discord_A_given_B",
                 "discord_B_given_A", "min_symplectic_eigenvalue"});
  double max_ab = 0.0, max_ba = 0.0;
  for (const auto& c : tr.samples) {
    const TwoModeGaussian g = extract_mirror_pair(c);
    const double ab = gaussian_discord(g, DiscordDirection::A_given_B);
    const double ba = gaussian_discord(g, DiscordDirection::B_given_A);
    max_ab = std::max(max_ab, ab);
    max_ba = std::max(max_ba, ba);
    csv.row({detail::tau_units(c.t), effective_occupation(c, 0), effective_occupation(c, 1),
             mutual_information(g), ab, ba, min_symplectic_eigenvalue(c.C)});
  }
  const CovarianceState cs = steady_covariance(build_drift_diffusion(s, mp));
  const TwoModeGaussian gs = extract_mirror_pair(cs);
  ctx.extra = {{"max_discord_A_given_B", max_ab},
               {"max_discord_B_given_A", max_ba},
               {"steady",
                {{"n_eff1", effective_occupation(cs, 0)},
                 {"n_eff2", effective_occupation(cs, 1)},
                 {"mutual_information", mutual_information(gs)},
                 {"discord_A_given_B", gaussian_discord(gs, DiscordDirection::A_given_B)},
                 {"discord_B_given_A", gaussian_discord(gs, DiscordDirection::B_given_A)}}}};
  ctx.write_json("steady.json", ctx.extra);
}

inline void run_effective(RunContext& ctx) {
  ModelParams mp = ctx.model();
  if (ctx.cfg.coupling_ratio > 0) mp.E[0] = drive_for_coupling(mp, ctx.cfg.coupling_ratio);
  const MeanFieldState s = steady_meanfield(mp);
  const EffectiveParams ep = effective_rates(mp, s);
  const auto times = detail::sample_times(ctx.cfg);
  const CovarianceState c0 = thermal_initial_state(mp);
  const CovarianceTrajectory full = evolve_covariance(c0, s, mp, times, ctx.cfg.tol);
  const EffectiveTrajectory red = evolve_effective_covariance(c0, ep, times, ctx.cfg.tol);
  for (const auto& w : full.warnings) ctx.warnings.push_back(w);
  for (const auto& w : red.warnings) ctx.warnings.push_back(w);
  CsvWriter csv(ctx.path("effective.csv"), ctx.meta(mp),
                {"t_tau", "n1_full", "n1_reduced", "n2_full", "n2_reduced", "rel_dev1", "rel_dev2"});
  double worst = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double f1 = effective_occupation(full.samples[k], 0);
    const double r1 = effective_occupation(red.quadratures[k], 0);
    const double f2 = effective_occupation(full.samples[k], 1);
    const double r2 = effective_occupation(red.quadratures[k], 1);
    const double d1 = std::abs(r1 - f1) / std::abs(f1), d2 = std::abs(r2 - f2) / std::abs(f2);
    worst = std::max(worst, d1);
    csv.row({detail::tau_units(times[k]), f1, r1, f2, r2, d1, d2});
  }
  ctx.extra = {{"E1", mp.E[0]},
               {"G1_over_kappa", std::abs(s.coupling(mp, 0)) / mp.kappa},
               {"Omega_eff", ep.Omega_eff},
               {"Gamma_eff", ep.Gamma_eff},
               {"Lambda", {ep.Lambda.real(), ep.Lambda.imag()}},
               {"max_rel_dev1", worst}};
  ctx.write_json("effective_params.json", ctx.extra);
}

inline TemperatureTrace temperature_run(const ModelParams& mp, const RunConfig& cfg,
                                        std::vector<std::string>* warnings) {
  const MeanFieldState s = steady_meanfield(mp);
  const CovarianceTrajectory tr =
      evolve_covariance(thermal_initial_state(mp), s, mp, detail::sample_times(cfg), cfg.tol);
  if (warnings) warnings->insert(warnings->end(), tr.warnings.begin(), tr.warnings.end());
  return temperature_trace(tr.samples, mp);
}

inline void run_temperature(RunContext& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const ModelParams mp = ctx.model();
  const ThermalizationOptions topt{cfg.ts_rel_tol, 0.1};
  TemperatureTrace tr = temperature_run(mp, cfg, &ctx.warnings);
  try {
    thermalization_time(tr, topt);
  } catch (const NotConverged& e) {
    ctx.warnings.push_back(std::string("t_s: ") + e.what());
  }
  {
    CsvWriter csv(ctx.path("temperature.csv"), ctx.meta(mp),
                  {"t_tau", "n_eff1", "n_eff2", "T_eff1_K", "T_eff2_K", "energy1_J", "energy2_J"});
    for (std::size_t k = 0; k < tr.t.size(); ++k)
      csv.row({tr.t[k], tr.n_eff[0][k], tr.n_eff[1][k], tr.T_eff[0][k], tr.T_eff[1][k],
               mean_energy(tr.n_eff[0][k], mp.Omega[0] * mp.omega_unit, cfg.energy_offset),
               mean_energy(tr.n_eff[1][k], mp.Omega[1] * mp.omega_unit, cfg.energy_offset)});
  }
  const auto deltas = detail::delta_grid(cfg);
  const auto pts = steady_gradient(mp, deltas, ctx.threads);
  {
    CsvWriter csv(ctx.path("gradient.csv"), ctx.meta(mp),
                  {"delta", "stable", "n_eff1", "n_eff2", "T_eff1_K", "T_eff2_K", "gradient_K",
                   "mutual_information"});
    for (const auto& p : pts) {
      csv.row({p.delta, p.stable ? 1.0 : 0.0, p.n_eff[0], p.n_eff[1], p.T_eff[0], p.T_eff[1],
               p.gradient, p.mutual_info});
      if (!p.stable) ctx.warnings.push_back("delta = " + format_double(p.delta) + " excluded: " + p.error);
    }
  }
  json sweep = json::array();
  if (!cfg.omega2_ratios.empty()) {
    std::vector<std::optional<double>> ts(cfg.omega2_ratios.size());
    std::vector<std::string> errs(ts.size());
    parallel_for(ts.size(), ctx.threads, [&](std::size_t i) {
      PhysicalParams p = cfg.physical;
      p.Omega2 = cfg.omega2_ratios[i] * p.Omega1;
      const ModelParams m = nondimensionalize(p, cfg.optical_noise);
      try {
        TemperatureTrace t = temperature_run(m, cfg, nullptr);
        ts[i] = thermalization_time(t, topt);
      } catch (const Error& e) {
        errs[i] = std::string(e.kind()) + ": " + e.what();
      }
    });
    CsvWriter csv(ctx.path("ts_sweep.csv"), ctx.meta(mp), {"omega2_over_omega1", "t_s_tau"});
    for (std::size_t i = 0; i < ts.size(); ++i) {
      csv.row({cfg.omega2_ratios[i], ts[i] ? *ts[i] : std::nan("")});
      if (!errs[i].empty()) ctx.warnings.push_back("ratio " + format_double(cfg.omega2_ratios[i]) + ": " + errs[i]);
      sweep.push_back({{"ratio", cfg.omega2_ratios[i]}, {"t_s_tau", detail::nullable(ts[i])}});
    }
  }
  ctx.extra = {{"t_s_tau", detail::nullable(tr.t_s)},
               {"terminal_T_eff1_K", tr.T_eff[0].back()},
               {"terminal_T_eff2_K", tr.T_eff[1].back()},
               {"ts_sweep", sweep}};
}

inline void run_spectra(RunContext& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const ModelParams mp = ctx.model();
  const MeanFieldState s = steady_meanfield(mp);
  const auto n = static_cast<std::size_t>(cfg.spectrum_points);
  const std::vector<double> grid =
      cfg.omega_max > 0 ? linspace(cfg.omega_min, cfg.omega_max, n) : default_grid(mp, n);
  const Spectrum s1 = position_spectrum(0, mp, s, grid, cfg.mirror2_spectrum);
  const Spectrum s2 = position_spectrum(1, mp, s, grid, cfg.mirror2_spectrum);
  const Spectrum out = output_spectrum(mp, s, grid, cfg.mirror2_spectrum, cfg.readout_form);
  const LorentzianFit l1 = lorentzian_approx(0, mp, s, grid);
  const LorentzianFit l2 = lorentzian_approx(1, mp, s, grid);
  CsvWriter csv(ctx.path("spectra.csv"), ctx.meta(mp),
                {"omega", "S_q1", "S_q2", "P_out", "lorentzian_q1", "lorentzian_q2"});
  for (std::size_t k = 0; k < grid.size(); ++k)
    csv.row({grid[k], s1.values[k], s2.values[k], out.values[k], l1(grid[k]), l2(grid[k])});

  auto fit_json = [](const LorentzianFit& f) {
    return json{{"center", f.center}, {"width", f.width}, {"amplitude", f.amplitude},
                {"residual", f.residual}, {"multi_peak", f.multi_peak}};
  };
  auto peaks = [&](const std::vector<double>& v) {
    json a = json::array();
    for (auto k : find_peaks(v)) a.push_back(grid[k]);
    return a;
  };
  json j{{"lorentzian_q1", fit_json(l1)}, {"lorentzian_q2", fit_json(l2)},
         {"peaks_q1", peaks(s1.values)},   {"peaks_q2", peaks(s2.values)},
         {"peaks_out", peaks(out.values)},
         {"variance_q1", spectrum_variance(0, mp, s, cfg.mirror2_spectrum)},
         {"variance_q2", spectrum_variance(1, mp, s, cfg.mirror2_spectrum)}};
  try {
    const CovarianceState c = steady_covariance(build_drift_diffusion(s, mp));
    j["covariance_q1"] = c.C(0, 0);
    j["covariance_q2"] = c.C(4, 4);
  } catch (const NotHurwitz&) {
    j["covariance_q1"] = j["covariance_q2"] = nullptr;
  }
  if (l1.multi_peak) ctx.warnings.push_back("S_q1 has more than one peak; single Lorentzian inadequate");
  try {
    const auto fits = reconstruct_mirror_spectra(out, mp, s);
    j["reconstruction"] = {fit_json(fits[0]), fit_json(fits[1])};
  } catch (const UnresolvablePeaks& e) {
    j["reconstruction"] = nullptr;
    ctx.warnings.push_back(std::string("reconstruction: ") + e.what());
  }
  ctx.write_json("fits.json", j);
  ctx.extra = j;
}

inline void run_stability(RunContext& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const ModelParams mp = ctx.model();
  const auto alpha = linspace(0.0, cfg.alpha_max, static_cast<std::size_t>(cfg.alpha_points));
  const auto delta = detail::delta_grid(cfg);
  const StabilityMap map = stability_map(mp, alpha, delta, cfg.alpha1_fixed, ctx.threads);
  for (const auto& w : map.warnings) ctx.warnings.push_back(w);
  CsvWriter csv(ctx.path("stability.csv"), ctx.meta(mp), {"alpha", "delta", "ratio_1", "ratio_2"});
  for (std::size_t i = 0; i < alpha.size(); ++i)
    for (std::size_t k = 0; k < delta.size(); ++k)
      csv.row({alpha[i], delta[k], map.at(0, i, k), map.at(1, i, k)});
  json contours = json::object();
  for (int j = 0; j < 2; ++j) {
    json segs = json::array();
    for (const auto& sgm : map.contour[j]) segs.push_back({sgm.a, sgm.b});
    contours["mirror" + std::to_string(j + 1)] = segs;
  }
  ctx.write_json("contour.json", {{"level", 1.0}, {"axes", {"alpha", "delta"}},
                                  {"alpha1_fixed", cfg.alpha1_fixed}, {"segments", contours}});
  ctx.extra = {{"contour_segments", {map.contour[0].size(), map.contour[1].size()}}};
}

inline void run_multistability(RunContext& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const ModelParams mp = ctx.model();
  const auto deltas = detail::delta_grid(cfg);
  std::vector<BranchSet> sets(deltas.size());
  parallel_for(deltas.size(), ctx.threads, [&](std::size_t i) {
    ModelParams m = mp;
    m.delta = deltas[i];
    sets[i] = multistability_branches(m, cfg.cubic_kappa);
  });
  CsvWriter csv(ctx.path("branches.csv"), ctx.meta(mp),
                {"delta", "cavity1_roots", "branch", "N1", "Q1", "N2", "Q2", "cubic_label1",
                 "cubic_label2", "jacobian_label", "max_re_eigenvalue", "residual1", "residual2"});
  json all = json::array();
  for (const auto& set : sets) {
    json rec{{"delta", set.delta}, {"cavity1_roots", set.cavity1_roots}, {"branches", json::array()}};
    for (std::size_t b = 0; b < set.branches.size(); ++b) {
      const Branch& br = set.branches[b];
      double re = -INFINITY;
      for (const auto& e : br.eigenvalues) re = std::max(re, e.real());
      csv.row_text({format_double(set.delta), std::to_string(set.cavity1_roots), std::to_string(b),
                    format_double(br.N1), format_double(br.Q1), format_double(br.N2),
                    format_double(br.Q2), to_string(br.cubic_label1), to_string(br.cubic_label2),
                    to_string(br.jacobian_label), format_double(re), format_double(br.residual1),
                    format_double(br.residual2)});
      rec["branches"].push_back({{"N1", br.N1}, {"Q1", br.Q1}, {"N2", br.N2}, {"Q2", br.Q2},
                                 {"cubic_label1", to_string(br.cubic_label1)},
                                 {"cubic_label2", to_string(br.cubic_label2)},
                                 {"jacobian_label", to_string(br.jacobian_label)},
                                 {"max_re_eigenvalue", re}});
    }
    all.push_back(rec);
  }
  ctx.write_json("branches.json", all);
}

inline void run_bidir_compare(RunContext& ctx) {
  const RunConfig& cfg = ctx.cfg;
  PhysicalParams uni = cfg.physical, bi = cfg.physical;
  uni.topology = Topology::unidirectional;
  uni.P2 = 0.0;
  bi.topology = Topology::bidirectional;
  if (bi.P2 == 0.0) bi.P2 = bi.P1;  // symmetric drive unless configured
  const ModelParams mu = nondimensionalize(uni, cfg.optical_noise);
  const ModelParams mb = nondimensionalize(bi, cfg.optical_noise);
  const auto deltas = detail::delta_grid(cfg);
  const auto pu = steady_gradient(mu, deltas, ctx.threads);
  const auto pb = steady_gradient(mb, deltas, ctx.threads);
  CsvWriter csv(ctx.path("bidir_compare.csv"), ctx.meta(mb),
                {"delta", "uni_stable", "uni_T_eff1_K", "uni_T_eff2_K", "uni_gradient_K",
                 "bi_stable", "bi_T_eff1_K", "bi_T_eff2_K", "bi_gradient_K", "bi_rel_asymmetry"});
  double worst = 0.0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const double rel = pb[i].stable ? std::abs(pb[i].gradient) / pb[i].T_eff[0] : std::nan("");
    if (pb[i].stable) worst = std::max(worst, rel);
    csv.row({deltas[i], pu[i].stable ? 1.0 : 0.0, pu[i].T_eff[0], pu[i].T_eff[1], pu[i].gradient,
             pb[i].stable ? 1.0 : 0.0, pb[i].T_eff[0], pb[i].T_eff[1], pb[i].gradient, rel});
  }
  ctx.extra = {{"bidirectional_power2_W", bi.P2}, {"max_bi_rel_asymmetry", worst}};
}

}  // namespace cascopt::cli
