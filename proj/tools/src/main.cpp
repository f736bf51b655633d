#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qgfc/app/commands.hpp"
#include "qgfc/app/config.hpp"
#include "qgfc/error.hpp"
#include "qgfc/version.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::int64_t> threads;
  std::optional<std::string> method;
  std::vector<std::string> sets;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config, "Flat key = value config file")->check(CLI::ExistingFile);
  sub->add_option("--seed", f.seed, "Master seed (u64)");
  sub->add_option("--out", f.out, "Output directory");
  sub->add_option("--threads", f.threads, "Worker threads (0: all cores)");
  sub->add_option("--method", f.method, "Curve method")
      ->check(CLI::IsMember({"direct", "closed", "mc", "fock", "all"}));
  sub->add_option("--set", f.sets, "Override a config key: --set key=value (repeatable)");
}

qgfc::app::RunConfig resolve(const CommonFlags& f) {
  qgfc::app::RunConfig cfg;
  if (!f.config.empty()) cfg = qgfc::app::load_config(f.config);
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw qgfc::app::ConfigError("--set expects key=value, got '" + kv + "'");
    qgfc::app::set_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (f.seed) cfg.seed = *f.seed;
  if (f.out) cfg.out_dir = *f.out;
  if (f.threads) cfg.threads = *f.threads;
  if (f.method) cfg.method = *f.method;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ghost frequency comb correlation simulator"};
  app.set_version_flag("--version", std::string(qgfc::kVersion));
  app.require_subcommand(1);

  CommonFlags flags;
  auto* curve = app.add_subcommand("curve", "Evaluate G2 on a delay grid");
  auto* simulate = app.add_subcommand("simulate", "Simulate detection, histogram, contrast and comb fit");
  auto* oracle = app.add_subcommand("oracle", "Truncated-Fock oracle versus closed form");
  auto* fit = app.add_subcommand("fit", "Fit the comb in an existing histogram CSV");
  for (auto* sub : {curve, simulate, oracle, fit}) add_common(sub, flags);
  std::string hist_path;
  std::optional<std::string> sidecar;
  fit->add_option("--hist", hist_path, "Histogram CSV (tau_bin_center_s,count)")->required();
  fit->add_option("--meta", sidecar, "Histogram sidecar JSON with lattice and geometry");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = resolve(flags);
    qgfc::app::CommandResult result;
    if (*curve)
      result = qgfc::app::cmd_curve(cfg);
    else if (*simulate)
      result = qgfc::app::cmd_simulate(cfg);
    else if (*oracle)
      result = qgfc::app::cmd_oracle(cfg);
    else
      result = qgfc::app::cmd_fit(cfg, hist_path,
                                  sidecar ? std::optional<std::filesystem::path>(*sidecar) : std::nullopt);
    std::cout << result.summary_line << "\n";
    return result.exit_code;
  } catch (const qgfc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
