#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/sha.h>
#include <spdlog/spdlog.h>

#include "cascopt/cascopt.hpp"

namespace cascopt::cli {

using json = nlohmann::ordered_json;
using Meta = std::vector<std::pair<std::string, std::string>>;

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), md);
  std::ostringstream os;
  for (unsigned char c : md) os << std::hex << std::setw(2) << std::setfill('0') << int(c);
  return os.str();
}

inline json physical_json(const PhysicalParams& p) {
  return {{"mass_kg", p.m},           {"omega1_rad_s", p.Omega1}, {"omega2_rad_s", p.Omega2},
          {"gamma1_rad_s", p.gamma1}, {"gamma2_rad_s", p.gamma2}, {"temperature_K", p.T_bath},
          {"length_m", p.L},          {"kappa_rad_s", p.kappa},   {"wavelength_m", p.lambda_L},
          {"power1_W", p.P1},         {"power2_W", p.P2},         {"detuning_rad_s", p.Delta},
          {"topology", to_string(p.topology)}};
}

inline json model_json(const ModelParams& mp) {
  return {{"delta", mp.delta},     {"kappa", mp.kappa},   {"gamma", mp.gamma},
          {"Omega", mp.Omega},     {"g", mp.g},           {"E", mp.E},
          {"nbar", mp.nbar},       {"topology", to_string(mp.topology)},
          {"optical_noise", to_string(mp.optical_noise)}, {"omega_unit_rad_s", mp.omega_unit},
          {"tau_s", mp.tau}};
}

inline json run_json(const RunConfig& c) {
  return {{"frequency_convention", to_string(c.frequency_convention)},
          {"optical_noise", to_string(c.optical_noise)},
          {"cubic_kappa_convention", to_string(c.cubic_kappa)},
          {"mirror2_spectrum", to_string(c.mirror2_spectrum)},
          {"readout_form", to_string(c.readout_form)},
          {"energy_offset", to_string(c.energy_offset)},
          {"horizon_tau", c.horizon},
          {"samples", c.samples},
          {"seed", c.seed},
          {"delta_min", c.delta_min},
          {"delta_max", c.delta_max},
          {"delta_points", c.delta_points},
          {"omega2_ratios", c.omega2_ratios},
          {"ts_rel_tol", c.ts_rel_tol},
          {"coupling_ratio", c.coupling_ratio},
          {"spectrum_points", c.spectrum_points},
          {"omega_min", c.omega_min},
          {"omega_max", c.omega_max},
          {"alpha_max", c.alpha_max},
          {"alpha_points", c.alpha_points},
          {"alpha1_fixed", c.alpha1_fixed}};
}

struct RunContext {
  std::string subcommand;
  std::string config_path;
  std::string config_text;
  RunConfig cfg;
  std::filesystem::path out_dir;
  unsigned threads = 1;
  std::vector<std::string> outputs;
  std::vector<std::string> warnings;
  json extra = json::object();  // subcommand summary for the manifest

  ModelParams model() const { return cfg.model(); }

  std::string digest() const { return sha256_hex(config_text); }

  // Header lines for every CSV: enough to rerun the file's subcommand.
  Meta meta(const ModelParams& mp) const {
    Meta m{{"tool", std::string("cascopt ") + version},
           {"subcommand", subcommand},
           {"config_sha256", digest()},
           {"units", "time in 1/Omega1 unless a column says tau; frequencies in Omega1; logs natural (nats)"}};
    m.emplace_back("physical", physical_json(cfg.physical).dump());
    m.emplace_back("run", run_json(cfg).dump());
    m.emplace_back("model", model_json(mp).dump());
    m.emplace_back("rtol", format_double(cfg.tol.rtol));
    m.emplace_back("atol", format_double(cfg.tol.atol));
    return m;
  }

  std::string path(const std::string& name) {
    outputs.push_back(name);
    return (out_dir / name).string();
  }

  void write_json(const std::string& name, const json& j) {
    write_text(path(name), j.dump(2) + "\n");
  }
};

inline json manifest(const RunContext& ctx, double seconds) {
  const auto now = std::chrono::system_clock::now();
  json m;
  m["tool"] = "cascopt";
  m["version"] = version;
  m["subcommand"] = ctx.subcommand;
  m["config_path"] = ctx.config_path;
  m["config_sha256"] = ctx.digest();
  m["physical"] = physical_json(ctx.cfg.physical);
  m["model"] = model_json(ctx.cfg.model());
  m["run"] = run_json(ctx.cfg);
  m["tolerances"] = {{"rtol", ctx.cfg.tol.rtol}, {"atol", ctx.cfg.tol.atol}};
  m["threads"] = ctx.threads;
  m["outputs"] = ctx.outputs;
  m["warnings"] = ctx.warnings;
  m["summary"] = ctx.extra;
  m["duration_s"] = seconds;
  m["finished_unix"] =
      std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
  return m;
}

inline json error_record(const std::string& kind, const std::string& message, int exit_code) {
  return {{"status", "error"}, {"kind", kind}, {"message", message}, {"exit_code", exit_code}};
}

}  // namespace cascopt::cli
