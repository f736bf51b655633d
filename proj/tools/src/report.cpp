#include "qgfc/app/report.hpp"

#include <fmt/format.h>

#include "qgfc/error.hpp"

namespace qgfc::app {

Json to_json(const ModeLattice& l) {
  Json j;
  j["n_modes"] = l.n_modes();
  j["nu_b_hz"] = l.nu_b();
  j["nu_s0_hz"] = l.nu_s0();
  j["nu_p_hz"] = l.nu_p();
  j["delta_nu_hz"] = l.delta_nu();
  j["profile"] = "rectangular";
  return j;
}

Json to_json(const DetectorGeometry& g) {
  Json j;
  j["r1_m"] = g.r1_m;
  j["r2_m"] = g.r2_m;
  j["c_mps"] = g.c_mps;
  j["offset_s"] = g.retarded_offset();
  return j;
}

Json to_json(const ContrastBreakdown& c) {
  Json j;
  j["contrast"] = c.contrast;
  j["peak_mean"] = c.peak_mean;
  j["valley_mean"] = c.valley_mean;
  j["peak_bins"] = c.peak_bins;
  j["valley_bins"] = c.valley_bins;
  j["valley_counts"] = c.valley_counts;
  return j;
}

Json to_json(const PeakEstimate& p) {
  Json j;
  j["center_s"] = p.center_s;
  j["stderr_s"] = p.stderr_s;
  j["counts"] = p.counts;
  return j;
}

Json to_json(const CombFit& f) {
  Json j;
  j["nu_b_est"] = f.nu_b_est;
  j["nu_b_stderr"] = f.nu_b_stderr;
  j["period_s"] = f.period_s;
  j["period_stderr_s"] = f.period_stderr;
  j["offset_est"] = f.offset_est;
  j["offset_stderr"] = f.offset_stderr;
  j["offset_ambiguous"] = true;
  j["ambiguity_period_s"] = f.ambiguity_period_s;
  j["residual_rms"] = f.residual_rms;
  j["n_peaks_used"] = f.n_peaks_used;
  j["weighted"] = f.weighted;
  Json peaks = Json::array();
  for (const auto& p : f.peaks)
    peaks.push_back({{"index", p.index}, {"center_s", p.center_s}, {"stderr_s", p.stderr_s},
                     {"residual_s", p.residual_s}});
  j["peak_positions"] = std::move(peaks);
  return j;
}

Json histogram_sidecar(const CoincidenceHistogram& h) {
  Json j;
  j["bin_width_s"] = h.bin_width;
  j["tau_min_s"] = h.tau_min;
  j["tau_max_s"] = h.tau_max;
  j["bins"] = h.bins();
  j["total_pairs"] = h.total_pairs;
  j["range_expanded"] = h.metadata.range_expanded;
  j["lattice"] = h.metadata.lattice ? to_json(*h.metadata.lattice) : Json(nullptr);
  j["geometry"] = h.metadata.geometry ? to_json(*h.metadata.geometry) : Json(nullptr);
  j["rate1_hz"] = h.metadata.rate1_hz;
  j["rate2_hz"] = h.metadata.rate2_hz;
  j["seed1"] = h.metadata.seed1;
  j["seed2"] = h.metadata.seed2;
  return j;
}

ModeLattice lattice_from_json(const Json& j) {
  try {
    ModeLattice::Params p;
    p.n_modes = j.at("n_modes").get<std::int64_t>();
    p.nu_b_hz = j.at("nu_b_hz").get<double>();
    p.nu_s0_hz = j.at("nu_s0_hz").get<double>();
    p.delta_nu_hz = j.at("delta_nu_hz").get<double>();
    if (j.contains("nu_p_hz")) p.nu_p_hz = j.at("nu_p_hz").get<double>();
    return ModeLattice(p);
  } catch (const Json::exception& e) {
    throw IoError(fmt::format("lattice JSON: {}", e.what()));
  }
}

DetectorGeometry geometry_from_json(const Json& j) {
  try {
    return {j.at("r1_m").get<double>(), j.at("r2_m").get<double>(), j.at("c_mps").get<double>()};
  } catch (const Json::exception& e) {
    throw IoError(fmt::format("geometry JSON: {}", e.what()));
  }
}

void apply_sidecar(CoincidenceHistogram& h, const Json& j) {
  if (j.contains("lattice") && !j["lattice"].is_null()) h.metadata.lattice = lattice_from_json(j["lattice"]);
  if (j.contains("geometry") && !j["geometry"].is_null())
    h.metadata.geometry = geometry_from_json(j["geometry"]);
  if (j.contains("bin_width_s")) {
    const double bw = j["bin_width_s"].get<double>();
    if (std::abs(bw - h.bin_width) > 1e-6 * bw)
      throw IoError(fmt::format("sidecar bin width {} does not match CSV bin width {}", bw, h.bin_width));
  }
  h.metadata.rate1_hz = j.value("rate1_hz", 0.0);
  h.metadata.rate2_hz = j.value("rate2_hz", 0.0);
  h.metadata.seed1 = j.value("seed1", std::uint64_t{0});
  h.metadata.seed2 = j.value("seed2", std::uint64_t{0});
  h.metadata.range_expanded = j.value("range_expanded", false);
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::string fit_summary_line(const CombFit& f) {
  return fmt::format("fit: {} peaks, nu_b = {:.9g} +/- {:.3g} Hz, offset = {:.6g} +/- {:.3g} ns "
                     "(mod {:.6g} us), residual rms = {:.3g} ns",
                     f.n_peaks_used, f.nu_b_est, f.nu_b_stderr, f.offset_est * 1e9,
                     f.offset_stderr * 1e9, f.ambiguity_period_s * 1e6, f.residual_rms * 1e9);
}

}  // namespace qgfc::app
