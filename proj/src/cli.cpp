#include "nfde/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "nfde/experiments.hpp"

namespace nfde {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

void print_report(std::ostream& out, const json& r) {
  out << "  " << (r["pass"].get<bool>() ? "PASS " : "FAIL ") << std::left << std::setw(26)
      << r["check"].get<std::string>() << " worst_margin=" << r["worst_margin"].dump();
  if (!r["converged"].is_null()) out << " converged=" << r["converged"].dump();
  if (!r["location"].get<std::string>().empty()) out << " at " << r["location"].get<std::string>();
  out << '\n';
}

ExperimentConfig load_config(const CliInvocation& inv) {
  if (inv.config.empty()) throw ConfigError("--config is required");
  if (!fs::exists(inv.config)) throw ConfigError("config not found: " + inv.config);
  auto cfg = ExperimentConfig::load(inv.config);
  if (!inv.out.empty()) cfg.output = inv.out;
  if (cfg.output.empty()) cfg.output = (fs::path("out") / cfg.name).string();
  return cfg;
}

int solve_or_verify(const CliInvocation& inv, bool verify, std::ostream& out) {
  auto cfg = load_config(inv);
  if (inv.checks) cfg.checks = *inv.checks;
  else if (!verify) cfg.checks.clear();
  else if (cfg.checks.empty()) cfg.checks = kAllChecks;
  // Re-validate after overriding the checks.
  auto j = cfg.to_json();
  cfg = ExperimentConfig::from_json(j);
  const auto res = inv.dt_halving > 0 ? run_experiment_converged(cfg, inv.dt_halving) : run_experiment(cfg);
  if (!inv.quiet) {
    const auto& s = res.series;
    out << cfg.name << ": " << s["t"].size() << " samples, dt=" << res.trajectory.dt;
    if (!s["t"].empty()) out << ", sup(T)=" << s["sup"].back().get<double>();
    out << "\n";
    for (const auto& r : res.reports) print_report(out, r.to_json());
    out << "artifacts: " << cfg.output << "\n";
  }
  return res.pass() ? 0 : 1;
}

int kernels(const CliInvocation& inv, std::ostream& out) {
  const auto cfg = load_config(inv);
  const auto rep = certify_kernels(cfg);
  fs::create_directories(cfg.output);
  write_json(fs::path(cfg.output) / "kernels.json", rep);
  write_json(fs::path(cfg.output) / "manifest.json", {{"runs", json::array({rep})}});
  if (!inv.quiet) {
    for (const char* h : {"K1", "K2"}) {
      const auto& k = rep["kernels"][h];
      out << "  " << (k["pass"].get<bool>() ? "PASS " : "FAIL ") << h << " c1=" << k["c1"].dump()
          << " c0=" << k["c0"].dump() << " regime=" << k["regime"].get<std::string>() << "\n";
    }
    out << "artifacts: " << cfg.output << "\n";
  }
  return rep["pass"].get<bool>() ? 0 : 1;
}

int sweep(const CliInvocation& inv, std::ostream& out) {
  if (inv.config.empty()) throw ConfigError("--config is required");
  if (!fs::exists(inv.config)) throw ConfigError("config not found: " + inv.config);
  json j = read_json(inv.config);
  if (!inv.out.empty()) j["output"] = inv.out;
  if (!j.contains("output")) j["output"] = (fs::path("out") / j.value("name", std::string("sweep"))).string();
  if (inv.checks && j.contains("base")) j["base"]["checks"] = *inv.checks;
  const auto spec = SweepSpec::from_json(j);
  const auto manifest = run_sweep(spec);
  const auto& sum = manifest["summary"];
  bool ok = sum["failed_runs"].get<std::size_t>() == 0;
  for (const auto& r : manifest["runs"]) ok = ok && r["pass"].get<bool>();
  if (!inv.quiet) {
    out << "sweep: " << sum["runs"] << " runs, " << sum["failed_runs"] << " failed\n";
    for (auto it = sum["check_counts"].begin(); it != sum["check_counts"].end(); ++it)
      out << "  " << std::left << std::setw(26) << it.key() << " pass=" << it.value()["pass"]
          << " fail=" << it.value()["fail"] << "\n";
    out << "artifacts: " << spec.output << "\n";
  }
  return ok ? 0 : 1;
}

int plot(const CliInvocation& inv, std::ostream& out) {
  if (inv.config.empty()) throw ConfigError("--manifest is required");
  if (!fs::exists(inv.config)) throw ConfigError("manifest not found: " + inv.config);
  const json m = read_json(inv.config);
  const fs::path dir = inv.out.empty() ? fs::path(inv.config).parent_path() / "plots" : fs::path(inv.out);
  const auto files = emit_plots(m, dir);
  if (!inv.quiet)
    for (const auto& f : files) out << "wrote " << f.string() << "\n";
  return 0;
}

}  // namespace

int dispatch(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  try {
    if (inv.subcommand == "solve") return solve_or_verify(inv, false, out);
    if (inv.subcommand == "verify") return solve_or_verify(inv, true, out);
    if (inv.subcommand == "kernels") return kernels(inv, out);
    if (inv.subcommand == "sweep") return sweep(inv, out);
    if (inv.subcommand == "plot") return plot(inv, out);
    err << "unknown subcommand '" << inv.subcommand << "'\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nonlinear fractional diffusion laboratory"};
  app.require_subcommand(1);
  CliInvocation inv;
  std::string checks;
  auto add_common = [&](CLI::App* sub, bool manifest) {
    if (manifest) {
      sub->add_option("--manifest,--config", inv.config, "Manifest JSON")->required();
    } else {
      sub->add_option("--config", inv.config, "Config JSON")->required();
    }
    sub->add_option("--out", inv.out, "Output directory");
    sub->add_flag("--quiet", inv.quiet, "Suppress the summary");
  };
  for (const char* name : {"solve", "verify"}) {
    auto* sub = app.add_subcommand(name, std::string(name) == "solve" ? "Evolve and write the trajectory"
                                                                      : "Evolve and run the estimate checks");
    add_common(sub, false);
    sub->add_option("--dt-halving", inv.dt_halving, "Repeat at dt/2^j, j <= k")->check(CLI::Range(0, 6));
    sub->add_option("--checks", checks, "Comma-separated checks");
  }
  add_common(app.add_subcommand("kernels", "Certify the Green kernel bounds"), false);
  auto* sw = app.add_subcommand("sweep", "Run a parameter sweep");
  add_common(sw, false);
  sw->add_option("--checks", checks, "Comma-separated checks");
  add_common(app.add_subcommand("plot", "Emit SVG plots from a manifest"), true);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  inv.subcommand = app.get_subcommands().front()->get_name();
  if (!checks.empty()) inv.checks = split_list(checks);
  return dispatch(inv, out, err);
}

}  // namespace nfde
