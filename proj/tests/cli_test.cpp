#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "qgfc/app/commands.hpp"
#include "qgfc/app/config.hpp"
#include "qgfc/io.hpp"

namespace qgfc::app {
namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "qgfc_cli_test" / name;
  fs::remove_all(dir);
  return dir;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(io::read_file(p)); }

RunConfig small_sim(const fs::path& out) {
  RunConfig c;
  c.n_modes = 200;
  c.pair_rate_hz = 10.0;
  c.duration_s = 2e3;
  c.stream_output = "binary";
  c.out_dir = out.string();
  c.threads = 1;
  return c;
}

TEST(Config, ParsesCommentsAndAuto) {
  const auto c = parse_config("# comment\n n_modes = 64 \nnu_b_hz=1e4 # trailing\ntau_min_s = auto\nmethod = all\n");
  EXPECT_EQ(c.n_modes, 64);
  EXPECT_EQ(c.nu_b_hz, 1e4);
  EXPECT_FALSE(c.tau_min_s.has_value());
  EXPECT_EQ(c.method, "all");
}

TEST(Config, UnknownKeyIsNamed) {
  try {
    parse_config("n_modes = 3\nfrobnicate = 2\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("frobnicate"), std::string::npos);
  }
}

TEST(Config, BadValueNamesKey) {
  try {
    parse_config("nu_b_hz = fast\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("nu_b_hz"), std::string::npos);
  }
  RunConfig c;
  c.delta_nu_hz = 3e4;
  try {
    validate(c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("delta_nu_hz"), std::string::npos);
  }
  c = {};
  c.method = "fft";
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(Config, EchoRoundTrips) {
  RunConfig c;
  c.n_modes = 77;
  c.nu_b_hz = 12345.678901234567;
  c.r1_m = 3.0;
  c.bin_width_s = 1.25e-9;
  c.seed = 18446744073709551615ull;
  const auto back = parse_config(to_text(c));
  EXPECT_EQ(to_text(back), to_text(c));
  EXPECT_EQ(back.nu_b_hz, c.nu_b_hz);
  EXPECT_EQ(back.seed, c.seed);
  for (const auto& [k, v] : echo(c)) {
    EXPECT_NE(k, "threads");
    EXPECT_NE(k, "out_dir");
  }
}

TEST(CurveCommand, FlatForSingleMode) {
  RunConfig c;
  c.n_modes = 1;
  c.n_points = 101;
  c.out_dir = fresh_dir("flat").string();
  cmd_curve(c);
  const auto h = io::read_file(fs::path(c.out_dir) / "curve_closed.csv");
  EXPECT_EQ(h.find("tau_s,g2\n"), 0u);
  std::size_t ones = 0, pos = 0;
  while ((pos = h.find(",1.00000000000e+00\n", pos)) != std::string::npos) ++ones, ++pos;
  EXPECT_EQ(ones, 101u);
}

TEST(CurveCommand, LargeLatticeDescriptors) {
  RunConfig c;
  c.n_modes = 100000;
  c.delta_nu_hz = 200.0;
  c.n_points = 1001;
  c.out_dir = fresh_dir("large").string();
  cmd_curve(c);
  const auto s = read_json(fs::path(c.out_dir) / "curve_summary.json");
  EXPECT_NEAR(s["peak_spacing_s"].get<double>(), 50e-6, 1e-18);
  EXPECT_NEAR(s["peak_width_s"].get<double>(), 500e-12, 1e-22);
  EXPECT_NEAR(s["peak_width_measured_s"].get<double>(), 500e-12, 1e-18);
  EXPECT_NEAR(s["envelope"]["first_zero_s"].get<double>(), 5e-3, 1e-15);
  EXPECT_NEAR(s["envelope"]["fwhm_s"].get<double>(), 4.43e-3, 5e-6);
  EXPECT_EQ(s["peak_positions_s"].size(), 5u);
}

TEST(CurveCommand, AllMethodsComparison) {
  RunConfig c;
  c.n_modes = 1000;
  c.n_points = 4001;
  c.method = "all";
  c.out_dir = fresh_dir("all").string();
  cmd_curve(c);
  const auto s = read_json(fs::path(c.out_dir) / "curve_summary.json");
  EXPECT_LT(s["max_rel_err_vs_closed"]["direct"].get<double>(), 1e-9);
  EXPECT_TRUE(fs::exists(fs::path(c.out_dir) / "curve_comparison.csv"));
  EXPECT_TRUE(s["skipped_methods"].contains("mc_envelope"));
}

TEST(CurveCommand, MonteCarloRecordsSeed) {
  RunConfig c;
  c.n_modes = 16;
  c.delta_nu_hz = 200.0;
  c.n_points = 5;
  c.mc_realizations = 100;
  c.method = "mc";
  c.seed = 99;
  c.out_dir = fresh_dir("mc").string();
  cmd_curve(c);
  const auto s = read_json(fs::path(c.out_dir) / "curve_summary.json");
  EXPECT_EQ(s["curves"][0]["seed"].get<std::uint64_t>(), 99u);
  EXPECT_EQ(s["curves"][0]["mc_realizations"].get<std::int64_t>(), 100);
  EXPECT_TRUE(fs::exists(fs::path(c.out_dir) / "curve_mc_envelope_stderr.csv"));
}

TEST(OracleCommand, SingleAndThreePairs) {
  RunConfig c;
  c.oracle_pairs = 1;
  c.oracle_points = 101;
  c.fidelity_n = 5;
  c.out_dir = fresh_dir("oracle1").string();
  cmd_oracle(c);
  auto r = read_json(fs::path(c.out_dir) / "oracle_report.json");
  EXPECT_LT(r["max_rel_err"].get<double>(), 1e-9);

  c.oracle_pairs = 3;
  c.fidelity_n = 50;
  c.out_dir = fresh_dir("oracle3").string();
  cmd_oracle(c);
  r = read_json(fs::path(c.out_dir) / "oracle_report.json");
  EXPECT_LT(r["max_rel_err"].get<double>(), 1e-6);
  for (const char* k : {"interactions", "cutoff_requested", "cutoff_used", "mean_pair_number", "alpha",
                        "coherent_norm_deficit", "fidelity"})
    EXPECT_TRUE(r["fidelity"].contains(k)) << k;
  EXPECT_GT(r["fidelity"]["fidelity"].get<double>(), 0.0);
  EXPECT_LT(r["contrast"]["phase_randomized"].get<double>(), r["contrast"]["entangled"].get<double>());
  EXPECT_EQ(io::read_file(fs::path(c.out_dir) / "oracle.csv").rfind("tau_s,g2_oracle,g2_closed,rel_err\n", 0), 0u);
}

TEST(OracleCommand, RejectsLinewidth) {
  RunConfig c;
  c.delta_nu_hz = 10.0;
  c.out_dir = fresh_dir("oracle_bad").string();
  EXPECT_THROW(cmd_oracle(c), ConfigError);
}

TEST(SimulateCommand, WritesArtifactsAndRecoversOffset) {
  auto c = small_sim(fresh_dir("sim"));
  c.r1_m = 3.0;
  const auto r = cmd_simulate(c);
  EXPECT_EQ(r.exit_code, 0);
  const fs::path out(c.out_dir);
  for (const char* f : {"stream_d1.bin", "stream_d2.bin", "histogram.csv", "histogram.json", "fit.json",
                        "summary.json", "manifest.json"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  const auto fit = read_json(out / "fit.json");
  const double truth = 3.0 / kSpeedOfLight;
  EXPECT_NEAR(fit["offset_est"].get<double>(), truth, 3.0 * fit["offset_stderr"].get<double>());
  EXPECT_TRUE(fit["offset_ambiguous"].get<bool>());
  const auto manifest = read_json(out / "manifest.json");
  EXPECT_EQ(manifest["config"]["r1_m"].get<std::string>(), "3");
  EXPECT_TRUE(manifest["runtime"].contains("wall_clock_s"));
  const auto s1 = io::read_stream_binary(out / "stream_d1.bin", c.duration_s);
  EXPECT_EQ(s1.timestamps.size(), 20000u);
}

TEST(SimulateCommand, ReproducibleFromManifestConfig) {
  auto c = small_sim(fresh_dir("sim_a"));
  c.seed = 1234;
  c.jitter_s = 1e-9;
  cmd_simulate(c);
  const auto manifest = read_json(fs::path(c.out_dir) / "manifest.json");
  std::string text;
  for (const auto& [k, v] : manifest["config"].items()) text += k + " = " + v.get<std::string>() + "\n";
  auto again = parse_config(text);
  again.out_dir = fresh_dir("sim_b").string();
  again.threads = 3;
  cmd_simulate(again);
  for (const char* f : {"histogram.csv", "fit.json", "summary.json", "stream_d2.bin"})
    EXPECT_EQ(io::read_file(fs::path(c.out_dir) / f), io::read_file(fs::path(again.out_dir) / f)) << f;
}

TEST(SimulateCommand, ReportsAnalysisFailureInExitCode) {
  auto c = small_sim(fresh_dir("sim_sparse"));
  c.duration_s = 20.0;  // 200 pairs, below the contrast floor
  const auto r = cmd_simulate(c);
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_TRUE(fs::exists(fs::path(c.out_dir) / "manifest.json"));
}

TEST(FitCommand, RefitsExportedHistogram) {
  auto c = small_sim(fresh_dir("fit_src"));
  cmd_simulate(c);
  RunConfig f;
  f.out_dir = fresh_dir("fit_out").string();
  const fs::path src(c.out_dir);
  const auto r = cmd_fit(f, src / "histogram.csv", src / "histogram.json");
  EXPECT_EQ(r.exit_code, 0);
  const auto a = read_json(src / "fit.json");
  const auto b = read_json(fs::path(f.out_dir) / "fit.json");
  EXPECT_NEAR(a["offset_est"].get<double>(), b["offset_est"].get<double>(), 1e-3 * a["offset_stderr"].get<double>());
  EXPECT_THROW(cmd_fit(f, src / "missing.csv", std::nullopt), IoError);
}

TEST(Executable, ExitCodesAndFlags) {
  const std::string exe = QGFC_CLI_PATH;
  const auto out = fresh_dir("exe");
  const auto run = [&](const std::string& args) {
    return std::system((exe + " " + args + " > /dev/null 2>&1").c_str());
  };
  EXPECT_EQ(run("curve --out " + out.string() + " --set n_modes=10 --set n_points=11 --method closed --seed 5 --threads 2"), 0);
  EXPECT_NE(run("curve --out " + out.string() + " --set bogus=1"), 0);
  EXPECT_NE(run("curve --method fft"), 0);
  EXPECT_NE(run("fit --out " + out.string() + " --hist /nonexistent/h.csv"), 0);
  const auto cfg = out / "run.cfg";
  io::write_file(cfg, "n_modes = 4\nn_points = 9\nmethod = fock\n");
  EXPECT_EQ(run("curve --config " + cfg.string() + " --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "curve_fock_oracle.csv"));
}

}  // namespace
}  // namespace qgfc::app
