// Command-line front end: one subcommand per analysis plus `reproduce <figN>`.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure (partial
// output written), 4 unknown command or figure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nhse.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitUnknown = 4;

struct Options {
  std::string config;
  std::string out;
  std::string format;
  int workers = 0;
  std::string figure;
};

nhse::RunConfig load(const Options& o) {
  nhse::RunConfig cfg = o.config.empty() ? nhse::RunConfig{} : nhse::load_config(o.config);
  if (!o.format.empty()) cfg.output.format = o.format;
  if (!o.out.empty()) cfg.output.path = o.out;
  if (o.workers > 0) cfg.workers = o.workers;
  return cfg;
}

int emit(const nhse::CommandOutput& r, const nhse::RunConfig& cfg) {
  if (cfg.output.path.empty()) {
    nhse::write_dataset(std::cout, r.data, cfg.output.format);
  } else {
    nhse::write_dataset_file(cfg.output.path, r.data, cfg.output.format);
  }
  if (r.failure) {
    std::cerr << "numerical failure: " << *r.failure << "\n";
    return kExitNumerical;
  }
  return 0;
}

int exit_for(const nhse::Error& e) {
  switch (e.code()) {
    case nhse::ErrorCode::ConfigError:
    case nhse::ErrorCode::InvalidParameter: return kExitConfig;
    case nhse::ErrorCode::UnknownFigure: return kExitUnknown;
    default: return kExitNumerical;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear non-Hermitian skin effect: bifurcation, basin and hysteresis analyses"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Config file (section.key = value)");
    sub->add_option("--out", o.out, "Output file (reproduce: output directory)");
    sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--workers", o.workers, "Worker threads (default: NHSE_WORKERS or 1)")->check(CLI::NonNegativeNumber);
  };

  auto* predict = app.add_subcommand("predict", "Averaged cycle amplitudes and regimes over a gamma grid");
  auto* bif = app.add_subcommand("bifurcation", "Continued cycle branch with fold and theory overlay");
  auto* traj = app.add_subcommand("trajectory", "Sampled profile from one boundary slope");
  auto* basin = app.add_subcommand("basin", "Separatrix slope and basin fraction over a gamma grid");
  auto* sweep = app.add_subcommand("sweep", "Quasi-static up/down gamma sweeps");
  auto* repro = app.add_subcommand("reproduce", "Canonical datasets for one figure (fig1..fig4)");
  for (auto* s : {predict, bif, traj, basin, sweep, repro}) add_common(s);
  repro->add_option("figure", o.figure, "fig1, fig2, fig3 or fig4")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    if (rc == 0) return 0;
    const bool unknown = dynamic_cast<const CLI::ExtrasError*>(&e) != nullptr ||
                         dynamic_cast<const CLI::RequiredError*>(&e) != nullptr;
    return unknown ? kExitUnknown : kExitConfig;
  }

  try {
    nhse::RunConfig cfg = load(o);
    if (repro->parsed()) {
      nhse::figure_config(o.figure);  // reject unknown ids before touching the filesystem
      const std::string dir = o.out.empty() ? o.figure : o.out;
      const auto bundle = nhse::reproduce(o.figure, dir, cfg.output.format, cfg.workers);
      for (const auto& e : bundle.entries) {
        std::fprintf(stderr, "%-28s %8.2f s%s\n", e.file.c_str(), e.runtime_s, e.failure ? "  FAILED" : "");
        if (e.failure) std::cerr << "  " << *e.failure << "\n";
      }
      return bundle.failed() ? kExitNumerical : 0;
    }
    if (predict->parsed()) return emit(nhse::cmd_predict(cfg), cfg);
    if (bif->parsed()) return emit(nhse::cmd_bifurcation(cfg), cfg);
    if (traj->parsed()) return emit(nhse::cmd_trajectory(cfg), cfg);
    if (basin->parsed()) return emit(nhse::cmd_basin(cfg), cfg);
    if (sweep->parsed()) return emit(nhse::cmd_sweep(cfg), cfg);
  } catch (const nhse::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUnknown;
}
