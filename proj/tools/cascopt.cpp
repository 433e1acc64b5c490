// cascopt <subcommand> --config <file> --out <dir> [--threads N] [--seed S]
//
// Exit codes: 0 ok, 2 configuration/usage error, 3 numerical error,
// 1 anything else. On failure error.json is written to --out when possible
// and the same record goes to stderr.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"

namespace fs = std::filesystem;
using namespace cascopt;
using namespace cascopt::cli;

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("cascopt");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("CASCOPT_LOG")) {
    const auto lvl = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only "off" itself should do that.
    if (lvl != spdlog::level::off || std::string(env) == "off") spdlog::set_level(lvl);
  }
}

json payload(const Error& e) {
  json p = json::object();
  if (const auto* h = dynamic_cast<const NotHurwitz*>(&e)) {
    json eig = json::array();
    for (const auto& z : h->eigenvalues()) eig.push_back({z.real(), z.imag()});
    p["eigenvalues"] = eig;
  } else if (const auto* s = dynamic_cast<const StepSizeUnderflow*>(&e)) {
    p["time"] = s->time();
  } else if (const auto* pe = dynamic_cast<const ParameterError*>(&e)) {
    p["field"] = pe->field();
  }
  return p;
}

int fail(const fs::path& out, json rec) {
  const std::string text = rec.dump();
  std::cerr << text << "\n";
  std::error_code ec;
  if (!out.empty() && fs::is_directory(out, ec)) {
    std::ofstream f(out / "error.json", std::ios::binary);
    f << rec.dump(2) << "\n";
  }
  return rec["exit_code"].get<int>();
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  const std::map<std::string, std::function<void(RunContext&)>> commands{
      {"meanfield", run_meanfield},     {"covariance", run_covariance},
      {"effective", run_effective},     {"temperature", run_temperature},
      {"spectra", run_spectra},         {"stability", run_stability},
      {"multistability", run_multistability}, {"bidir-compare", run_bidir_compare}};

  CLI::App app{"Cascaded optomechanics simulator"};
  app.set_version_flag("--version", std::string(version));
  app.require_subcommand(1);
  std::string config_path, out_dir;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::optional<unsigned> seed;
  for (const auto& [name, fn] : commands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "INI configuration file")->required();
    sub->add_option("--out", out_dir, "output directory (created if missing)")->required();
    sub->add_option("--threads", threads, "worker cap")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "overrides run.seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help() << "\n";
    return fail(out_dir, error_record("usage", e.what(), 2));
  }

  RunContext ctx;
  ctx.subcommand = app.get_subcommands().front()->get_name();
  ctx.config_path = config_path;
  ctx.out_dir = out_dir;
  ctx.threads = threads;

  try {
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + out_dir + ": " + ec.message());
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw ConfigError("cannot read configuration " + config_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    ctx.config_text = buf.str();
    ctx.cfg = parse_config(ctx.config_text);
    if (seed) ctx.cfg.seed = *seed;
    (void)ctx.model();  // validates physical parameters before any work
  } catch (const Error& e) {
    json rec = error_record(e.kind(), e.what(), 2);
    rec["payload"] = payload(e);
    return fail(ctx.out_dir, rec);
  }

  std::mutex warn_mu;
  set_warning_handler([&ctx, &warn_mu](const std::string& msg) {
    spdlog::warn("{}", msg);
    std::lock_guard lock(warn_mu);
    ctx.warnings.push_back(msg);
  });
  spdlog::info("{} with {} ({} threads)", ctx.subcommand, config_path, ctx.threads);

  const auto t0 = std::chrono::steady_clock::now();
  try {
    commands.at(ctx.subcommand)(ctx);
  } catch (const ParameterError& e) {
    json rec = error_record(e.kind(), e.what(), 2);
    rec["payload"] = payload(e);
    return fail(ctx.out_dir, rec);
  } catch (const NumericalError& e) {
    json rec = error_record(e.kind(), e.what(), 3);
    rec["payload"] = payload(e);
    return fail(ctx.out_dir, rec);
  } catch (const ConfigError& e) {
    return fail(ctx.out_dir, error_record(e.kind(), e.what(), 2));
  } catch (const std::exception& e) {
    return fail(ctx.out_dir, error_record("internal", e.what(), 1));
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& w : ctx.warnings) spdlog::debug("warning: {}", w);
  std::ofstream(ctx.out_dir / "manifest.json", std::ios::binary) << manifest(ctx, secs).dump(2) << "\n";
  spdlog::info("done in {:.3f} s, {} outputs", secs, ctx.outputs.size());
  return 0;
}
