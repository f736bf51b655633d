#include "qgfc/app/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "qgfc/app/report.hpp"
#include "qgfc/correlation.hpp"
#include "qgfc/detection.hpp"
#include "qgfc/io.hpp"
#include "qgfc/parallel.hpp"
#include "qgfc/quantumstate.hpp"
#include "qgfc/seed.hpp"
#include "qgfc/timing.hpp"
#include "qgfc/version.hpp"

namespace qgfc::app {
namespace {

namespace fs = std::filesystem;

// Relative errors are taken against max(|a|, |b|, floor) so that exact comb
// zeros, where both paths return rounding noise, do not blow up the ratio.
constexpr double kRelErrFloor = 1e-12;

double rel_err(double value, double reference) {
  return std::abs(value - reference) / std::max({std::abs(value), std::abs(reference), kRelErrFloor});
}

class OutputDir {
 public:
  explicit OutputDir(const std::string& dir) : root_(dir) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw IoError(fmt::format("{}: cannot create output directory: {}", root_.string(), ec.message()));
  }

  void write(const std::string& name, const std::string& contents) {
    io::write_file(root_ / name, contents);
    files_.push_back({name, contents.size()});
  }

  const fs::path& root() const { return root_; }
  std::vector<OutputFile>& files() { return files_; }

 private:
  fs::path root_;
  std::vector<OutputFile> files_;
};

CurveMethod method_of(const std::string& name) {
  if (name == "mc") return CurveMethod::mc_envelope;
  if (name == "fock") return CurveMethod::fock_oracle;
  return parse_curve_method(name);
}

unsigned thread_count(const RunConfig& cfg) {
  return resolve_threads(static_cast<unsigned>(cfg.threads));
}

std::pair<double, double> window(const RunConfig& cfg, std::optional<double> lo,
                                 std::optional<double> hi) {
  const double offset = make_geometry(cfg).retarded_offset();
  const double half = 0.5 * cfg.window_periods / cfg.nu_b_hz;
  return {lo.value_or(offset - half), hi.value_or(offset + half)};
}

Json config_json(const RunConfig& cfg) {
  Json j = Json::object();
  for (const auto& [k, v] : echo(cfg)) j[k] = v;
  return j;
}

Json versions_json() {
  Json j;
  j["qgfc"] = kVersion;
#if defined(__clang__)
  j["compiler"] = fmt::format("clang {}.{}.{}", __clang_major__, __clang_minor__, __clang_patchlevel__);
#elif defined(__GNUC__)
  j["compiler"] = fmt::format("gcc {}.{}.{}", __GNUC__, __GNUC_MINOR__, __GNUC_PATCHLEVEL__);
#else
  j["compiler"] = "unknown";
#endif
  j["cxx_standard"] = static_cast<long>(__cplusplus);
  j["stream_format_version"] = io::kStreamFormatVersion;
  return j;
}

void write_manifest(OutputDir& out, const std::string& command, const RunConfig& cfg,
                    const Json& derived_seeds, std::chrono::steady_clock::time_point started) {
  Json outputs = Json::array();
  for (const auto& f : out.files()) outputs.push_back({{"file", f.name}, {"bytes", f.bytes}});
  Json m;
  m["command"] = command;
  m["config"] = config_json(cfg);
  m["seed"] = cfg.seed;
  m["derived_seeds"] = derived_seeds;
  m["seed_rule"] =
      "derive_seed(master, label, i) = splitmix64(splitmix64(master ^ fnv1a64(label)) + i)";
  m["versions"] = versions_json();
  m["outputs"] = std::move(outputs);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  // Everything above depends only on config and seed; this block does not.
  m["runtime"] = {{"threads", thread_count(cfg)}, {"out_dir", cfg.out_dir}, {"wall_clock_s", wall}};
  out.write("manifest.json", dump(m));
}

std::string method_unavailable(CurveMethod m, const ModeLattice& l, const RunConfig& cfg) {
  switch (m) {
    case CurveMethod::direct:
      return l.delta_nu() == 0.0 ? "" : "needs delta_nu_hz = 0";
    case CurveMethod::closed:
      return "";
    case CurveMethod::mc_envelope: {
      if (l.delta_nu() == 0.0) return "needs delta_nu_hz > 0";
      const double cost = static_cast<double>(cfg.n_points) * static_cast<double>(cfg.mc_realizations) *
                          static_cast<double>(l.n_modes());
      return cost > 2e10 ? "n_points * mc_realizations * n_modes above 2e10" : "";
    }
    case CurveMethod::fock_oracle:
      if (l.delta_nu() != 0.0) return "needs delta_nu_hz = 0";
      if (l.n_modes() > kMaxOraclePairs) return fmt::format("needs n_modes <= {}", kMaxOraclePairs);
      return "";
  }
  return "";
}

Json peaks_in_window(const ModeLattice& l, const DetectorGeometry& g, double lo, double hi) {
  const double off = g.retarded_offset();
  const auto first = static_cast<std::int64_t>(std::ceil((lo - off) * l.nu_b()));
  const auto last = static_cast<std::int64_t>(std::floor((hi - off) * l.nu_b()));
  Json list = Json::array();
  if (last >= first) {
    const auto end = std::min(last, first + 999);
    for (double t : comb_peak_positions(l, g, first, end)) list.push_back(t);
  }
  return list;
}

}  // namespace

CommandResult cmd_curve(const RunConfig& cfg) {
  validate(cfg);
  const auto lattice = make_lattice(cfg);
  const auto geom = make_geometry(cfg);
  const auto [lo, hi] = window(cfg, cfg.tau_min_s, cfg.tau_max_s);
  CurveOptions opt;
  opt.mc_realizations = cfg.mc_realizations;
  opt.seed = cfg.seed;
  opt.threads = thread_count(cfg);
  opt.oracle_cutoff = static_cast<int>(cfg.oracle_cutoff);

  std::vector<CurveMethod> methods;
  Json skipped = Json::object();
  if (cfg.method == "all") {
    for (auto m : {CurveMethod::closed, CurveMethod::direct, CurveMethod::mc_envelope,
                   CurveMethod::fock_oracle}) {
      const auto why = method_unavailable(m, lattice, cfg);
      if (why.empty())
        methods.push_back(m);
      else
        skipped[std::string(to_string(m))] = why;
    }
  } else {
    methods.push_back(method_of(cfg.method));
  }

  OutputDir out(cfg.out_dir);
  std::vector<CorrelationCurve> curves;
  for (auto m : methods) {
    curves.push_back(curve(lattice, geom, lo, hi, cfg.n_points, m, opt));
    const auto name = std::string(to_string(m));
    out.write(fmt::format("curve_{}.csv", name), io::curve_csv(curves.back()));
    if (m == CurveMethod::mc_envelope)
      out.write(fmt::format("curve_{}_stderr.csv", name), io::curve_stderr_csv(curves.back()));
  }

  Json summary;
  summary["lattice"] = to_json(lattice);
  summary["geometry"] = to_json(geom);
  summary["normalization"] = std::string(to_string(Normalization::peak));
  summary["tau_min_s"] = lo;
  summary["tau_max_s"] = hi;
  summary["n_points"] = cfg.n_points;
  summary["peak_spacing_s"] = lattice.period();
  if (lattice.n_modes() >= 2) {
    summary["peak_width_s"] = comb_peak_width(lattice);
    summary["peak_width_measured_s"] = first_zero_after(lattice, 0.0);
  } else {
    summary["peak_width_s"] = nullptr;
    summary["peak_width_measured_s"] = nullptr;
  }
  summary["peak_width_definition"] = "distance from a comb-peak maximum to its first adjacent zero";
  if (lattice.delta_nu() > 0.0) {
    const auto env = envelope_widths(lattice);
    summary["envelope"] = {{"first_zero_s", env.first_zero_s}, {"fwhm_s", env.fwhm_s}};
  } else {
    summary["envelope"] = nullptr;
  }
  summary["peak_positions_s"] = peaks_in_window(lattice, geom, lo, hi);

  Json per_method = Json::array();
  for (const auto& c : curves) {
    Json j;
    j["method"] = std::string(to_string(c.method));
    j["max_value"] = *std::max_element(c.values.begin(), c.values.end());
    j["min_value"] = *std::min_element(c.values.begin(), c.values.end());
    if (c.mc_realizations) j["mc_realizations"] = *c.mc_realizations;
    if (c.seed) j["seed"] = *c.seed;
    if (c.method == CurveMethod::fock_oracle) j["oracle_cutoff"] = cfg.oracle_cutoff;
    per_method.push_back(std::move(j));
  }
  summary["curves"] = std::move(per_method);
  if (cfg.method == "all") summary["skipped_methods"] = skipped;

  std::string line = fmt::format("curve: {} points, method {}, spacing {:.6g} us", cfg.n_points,
                                 cfg.method, lattice.period() * 1e6);
  if (lattice.n_modes() >= 2) line += fmt::format(", peak width {:.6g} ps", comb_peak_width(lattice) * 1e12);

  if (cfg.method == "all" && curves.size() > 1) {
    std::string csv = "tau_s,g2_closed";
    for (std::size_t m = 1; m < curves.size(); ++m) {
      const auto name = std::string(to_string(curves[m].method));
      csv += fmt::format(",g2_{0},rel_err_{0}", name);
    }
    csv += "\n";
    std::vector<double> max_err(curves.size(), 0.0);
    const auto& ref = curves.front().values;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      csv += fmt::format("{:.11e},{:.11e}", curves.front().tau[i], ref[i]);
      for (std::size_t m = 1; m < curves.size(); ++m) {
        const double e = rel_err(curves[m].values[i], ref[i]);
        max_err[m] = std::max(max_err[m], e);
        csv += fmt::format(",{:.11e},{:.3e}", curves[m].values[i], e);
      }
      csv += "\n";
    }
    out.write("curve_comparison.csv", csv);
    Json cmp = Json::object();
    for (std::size_t m = 1; m < curves.size(); ++m) {
      cmp[std::string(to_string(curves[m].method))] = max_err[m];
      line += fmt::format(", max rel err {} {:.2e}", to_string(curves[m].method), max_err[m]);
    }
    summary["max_rel_err_vs_closed"] = cmp;
    summary["rel_err_floor"] = kRelErrFloor;
  }
  out.write("curve_summary.json", dump(summary));
  return {0, line, out.files()};
}

CommandResult cmd_simulate(const RunConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  validate(cfg);
  const auto lattice = make_lattice(cfg);
  const auto geom = make_geometry(cfg);
  if (lattice.n_modes() < 2) throw ConfigError("config key 'n_modes': simulate needs a comb (n_modes >= 2)");
  const unsigned threads = thread_count(cfg);

  const auto [wlo, whi] = window(cfg, std::nullopt, std::nullopt);
  PairSamplingOptions popt;
  popt.window_min_s = wlo;
  popt.window_max_s = whi;
  auto pairs = sample_pairs(lattice, geom, cfg.pair_rate_hz, cfg.duration_s, cfg.jitter_s, cfg.seed,
                            popt, threads);
  EventStream d1 = std::move(pairs.d1);
  EventStream d2 = std::move(pairs.d2);
  Json derived = {{"pairs", cfg.seed}};
  std::size_t accidental_events = 0;
  if (cfg.accidental_rate_hz > 0.0) {
    const auto s1 = derive_seed(cfg.seed, "accidentals", 1);
    const auto s2 = derive_seed(cfg.seed, "accidentals", 2);
    const auto a1 = sample_singles(cfg.accidental_rate_hz, cfg.duration_s, s1, 1, threads);
    const auto a2 = sample_singles(cfg.accidental_rate_hz, cfg.duration_s, s2, 2, threads);
    accidental_events = a1.timestamps.size() + a2.timestamps.size();
    d1 = merge_streams(d1, a1);
    d2 = merge_streams(d2, a2);
    derived["accidentals_d1"] = s1;
    derived["accidentals_d2"] = s2;
  }

  const auto [hlo, hhi] = window(cfg, cfg.hist_tau_min_s, cfg.hist_tau_max_s);
  const double bw = cfg.bin_width_s.value_or(comb_peak_width(lattice) / 10.0);
  auto hist = build_histogram(d1, d2, bw, hlo, hhi);
  hist.metadata.lattice = lattice;
  hist.metadata.geometry = geom;

  OutputDir out(cfg.out_dir);
  if (cfg.stream_output == "binary" || cfg.stream_output == "both") {
    out.write("stream_d1.bin", io::stream_binary(d1));
    out.write("stream_d2.bin", io::stream_binary(d2));
  }
  if (cfg.stream_output == "csv" || cfg.stream_output == "both") {
    out.write("stream_d1.csv", io::stream_csv(d1));
    out.write("stream_d2.csv", io::stream_csv(d2));
  }
  out.write("histogram.csv", io::histogram_csv(hist));
  out.write("histogram.json", dump(histogram_sidecar(hist)));

  int exit_code = 0;
  Json summary;
  summary["n_pairs"] = pairs.n_pairs;
  summary["accidental_events"] = accidental_events;
  summary["events_d1"] = d1.timestamps.size();
  summary["events_d2"] = d2.timestamps.size();
  summary["histogram_total"] = hist.total_pairs;
  summary["truth"] = {{"nu_b_hz", lattice.nu_b()}, {"offset_s", geom.retarded_offset()}};
  summary["peak_width_s"] = comb_peak_width(lattice);

  std::string line = fmt::format("simulate: {} pairs, {} coincidences in window", pairs.n_pairs,
                                 hist.total_pairs);
  try {
    ContrastOptions copt;
    copt.min_total_counts = static_cast<std::uint64_t>(cfg.contrast_min_counts);
    const auto cb = contrast_breakdown(hist, copt);
    summary["contrast"] = to_json(cb);
    line += fmt::format(", contrast {:.6f}", cb.contrast);
  } catch (const StatisticsError& e) {
    summary["contrast"] = {{"error", e.what()}};
    line += ", contrast unavailable";
    exit_code = 3;
  }

  try {
    PeakSearchOptions sopt;
    sopt.min_prominence = cfg.min_prominence;
    const auto peaks = detect_peaks(hist, sopt);
    Json plist = Json::array();
    for (const auto& p : peaks) plist.push_back(to_json(p));
    summary["peaks"] = std::move(plist);
    const auto fit = fit_comb(peaks, lattice.nu_b());
    const Json fj = to_json(fit);
    out.write("fit.json", dump(fj));
    summary["fit"] = fj;
    const double period = lattice.period();
    const double truth = geom.retarded_offset() - period * std::ceil(geom.retarded_offset() / period - 0.5);
    summary["offset_pull"] = fit.offset_stderr > 0.0 ? (fit.offset_est - truth) / fit.offset_stderr : 0.0;
    summary["resolution_estimate_s"] =
        resolution_estimate(lattice, static_cast<double>(pairs.n_pairs), static_cast<double>(peaks.size()));
    line += "; " + fit_summary_line(fit);
  } catch (const StatisticsError& e) {
    summary["fit"] = {{"error", e.what()}};
    line += "; fit unavailable";
    exit_code = 3;
  } catch (const FitError& e) {
    summary["fit"] = {{"error", e.what()}};
    line += "; fit unavailable";
    exit_code = 3;
  }
  out.write("summary.json", dump(summary));
  write_manifest(out, "simulate", cfg, derived, started);
  return {exit_code, line, out.files()};
}

CommandResult cmd_oracle(const RunConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  validate(cfg);
  if (cfg.delta_nu_hz != 0.0)
    throw ConfigError("config key 'delta_nu_hz': the Fock oracle needs single-frequency modes (0)");
  const int pairs = static_cast<int>(cfg.oracle_pairs);
  const int cutoff = static_cast<int>(cfg.oracle_cutoff);
  RunConfig small = cfg;
  small.n_modes = pairs;
  const auto lattice = make_lattice(small);
  const DetectorGeometry origin{};
  const unsigned threads = thread_count(cfg);
  fock_dimension(pairs, cutoff);  // dimension guard before any work

  CurveOptions opt;
  opt.threads = threads;
  opt.oracle_cutoff = cutoff;
  const double period = lattice.period();
  const auto oracle = curve(lattice, origin, 0.0, period, cfg.oracle_points, CurveMethod::fock_oracle, opt);
  const auto closed = curve(lattice, origin, 0.0, period, cfg.oracle_points, CurveMethod::closed, opt);

  OutputDir out(cfg.out_dir);
  std::string csv = "tau_s,g2_oracle,g2_closed,rel_err\n";
  double max_err = 0.0;
  for (std::size_t i = 0; i < oracle.tau.size(); ++i) {
    const double e = rel_err(oracle.values[i], closed.values[i]);
    max_err = std::max(max_err, e);
    csv += fmt::format("{:.11e},{:.11e},{:.11e},{:.3e}\n", oracle.tau[i], oracle.values[i],
                       closed.values[i], e);
  }
  out.write("oracle.csv", csv);

  // Fidelity of the n-interaction pair expansion against the coherent
  // product with matched mean photon number.  The cutoff is raised until the
  // coherent state fits.
  const int n = static_cast<int>(cfg.fidelity_n);
  const int requested = static_cast<int>(cfg.fidelity_cutoff.value_or(std::max<std::int64_t>(n, 1)));
  Json fidelity;
  fidelity["interactions"] = n;
  fidelity["cutoff_requested"] = requested;
  fidelity["alpha_matching"] = "mean photon number: |alpha|^2 = <m> of the pair expansion";
  int used = requested;
  for (;; used += std::max(1, used / 8)) {
    try {
      const auto pert = build_perturbation_state(n, used);
      const double alpha = std::sqrt(pert.mean_pair_number);
      const auto coh = build_coherent_product(Complex(alpha, 0.0), used);
      fidelity["cutoff_used"] = used;
      fidelity["mean_pair_number"] = pert.mean_pair_number;
      fidelity["alpha"] = alpha;
      fidelity["coherent_norm_deficit"] = coh.norm_deficit();
      fidelity["coherent_mean_pair_number"] = coh.mean_pair_number();
      fidelity["fidelity"] = state_fidelity(pert.state, coh);
      break;
    } catch (const RangeError& e) {
      if (used > 4096) throw;
    }
  }

  // Baseline with the relative pair phases randomized per draw.
  const double entangled_contrast = [&] {
    const auto [mn, mx] = std::minmax_element(oracle.values.begin(), oracle.values.end());
    return (*mx - *mn) / (*mx + *mn);
  }();
  constexpr int kPhaseDraws = 64;
  constexpr int kBaselinePoints = 101;
  std::vector<double> avg(kBaselinePoints, 0.0);
  const double r = 1.0 / std::sqrt(static_cast<double>(pairs));
  for (int d = 0; d < kPhaseDraws; ++d) {
    auto rng = make_rng(cfg.seed, "oracle_phase", static_cast<std::uint64_t>(d));
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::vector<Complex> amps(static_cast<std::size_t>(pairs));
    for (auto& a : amps) a = std::polar(r, phase(rng));
    const auto state = MultiPairState::entangled_pairs(amps, cutoff);
    for (int i = 0; i < kBaselinePoints; ++i) {
      const double tau = period * i / (kBaselinePoints - 1);
      avg[static_cast<std::size_t>(i)] += g2_fock_oracle(state, lattice, 0.5 * tau, -0.5 * tau) / kPhaseDraws;
    }
  }
  const auto [bmn, bmx] = std::minmax_element(avg.begin(), avg.end());
  const double baseline_contrast = *bmx + *bmn > 0.0 ? (*bmx - *bmn) / (*bmx + *bmn) : 0.0;

  Json report;
  report["lattice"] = to_json(lattice);
  report["oracle_pairs"] = pairs;
  report["oracle_cutoff"] = cutoff;
  report["fock_dimension"] = fock_dimension(pairs, cutoff);
  report["state"] = "equal-amplitude superposition of one photon pair over the mode pairs";
  report["n_points"] = cfg.oracle_points;
  report["max_rel_err"] = max_err;
  report["rel_err_floor"] = kRelErrFloor;
  report["fidelity"] = fidelity;
  report["contrast"] = {{"entangled", entangled_contrast},
                        {"phase_randomized", baseline_contrast},
                        {"phase_draws", kPhaseDraws}};
  out.write("oracle_report.json", dump(report));
  write_manifest(out, "oracle", cfg, Json{{"oracle_phase", cfg.seed}}, started);

  const std::string line = fmt::format(
      "oracle: P={} M={} max rel err {:.2e}; fidelity(n={}, M={}) = {:.6g}; contrast {:.4f} entangled vs "
      "{:.4f} phase-randomized",
      pairs, cutoff, max_err, n, used, fidelity["fidelity"].get<double>(), entangled_contrast,
      baseline_contrast);
  return {0, line, out.files()};
}

CommandResult cmd_fit(const RunConfig& cfg, const fs::path& histogram_csv,
                      const std::optional<fs::path>& sidecar_json) {
  validate(cfg);
  auto hist = io::read_histogram_csv(histogram_csv);
  if (sidecar_json) {
    Json side;
    try {
      side = Json::parse(io::read_file(*sidecar_json));
    } catch (const Json::exception& e) {
      throw IoError(fmt::format("{}: {}", sidecar_json->string(), e.what()));
    }
    apply_sidecar(hist, side);
  } else {
    hist.metadata.lattice = make_lattice(cfg);
    hist.metadata.geometry = make_geometry(cfg);
  }
  if (!hist.metadata.lattice || hist.metadata.lattice->n_modes() < 2)
    throw ConfigError("config key 'n_modes': fit needs a comb (n_modes >= 2)");

  PeakSearchOptions sopt;
  sopt.min_prominence = cfg.min_prominence;
  const auto peaks = detect_peaks(hist, sopt);
  const auto fit = fit_comb(peaks, hist.metadata.lattice->nu_b());
  OutputDir out(cfg.out_dir);
  Json j = to_json(fit);
  j["source"] = histogram_csv.filename().string();
  out.write("fit.json", dump(j));
  return {0, fit_summary_line(fit), out.files()};
}

}  // namespace qgfc::app
