#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qgfc/error.hpp"
#include "qgfc/lattice.hpp"

namespace qgfc::app {

/// Raised for malformed or out-of-range configuration; the message names the key.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Everything a run needs.  Keys in the flat file use the member names.
/// Optional members accept the value "auto".
struct RunConfig {
  // lattice
  std::int64_t n_modes = 1000;
  double nu_b_hz = 20e3;
  double nu_s0_hz = 193.4e12;
  double delta_nu_hz = 0.0;
  std::optional<double> nu_p_hz;
  // geometry
  double r1_m = 0.0;
  double r2_m = 0.0;
  double c_mps = kSpeedOfLight;
  // curve
  std::optional<double> tau_min_s;
  std::optional<double> tau_max_s;
  std::int64_t n_points = 100'001;
  std::string method = "closed";
  std::int64_t mc_realizations = 10'000;
  // detection
  double pair_rate_hz = 10.0;
  double duration_s = 1e5;
  double jitter_s = 0.0;
  double window_periods = 5.0;
  double accidental_rate_hz = 0.0;
  std::string stream_output = "both";  // none | binary | csv | both
  // histogram and analysis
  std::optional<double> bin_width_s;
  std::optional<double> hist_tau_min_s;
  std::optional<double> hist_tau_max_s;
  double min_prominence = 0.25;
  std::int64_t contrast_min_counts = 1000;
  // oracle
  std::int64_t oracle_pairs = 3;
  std::int64_t oracle_cutoff = 2;
  std::int64_t oracle_points = 1001;
  std::int64_t fidelity_n = 50;
  std::optional<std::int64_t> fidelity_cutoff;
  // run
  std::uint64_t seed = 0;
  std::string out_dir = "qgfc_out";
  std::int64_t threads = 0;  // 0: all hardware threads
};

/// Sets one key from its textual value.  Throws ConfigError for unknown keys
/// or unparsable values.
void set_value(RunConfig& cfg, std::string_view key, std::string_view value);

/// Flat "key = value" text; '#' starts a comment.  Does not validate ranges.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Range checks across all keys, then builds the lattice and geometry once to
/// re-run their own validation.  Throws ConfigError.
void validate(const RunConfig& cfg);

ModeLattice make_lattice(const RunConfig& cfg);
DetectorGeometry make_geometry(const RunConfig& cfg);

/// Effective configuration as ordered (key, value) text pairs, in a form
/// parse_config reads back to the same values.  Run-environment keys
/// (threads, out_dir) are left out so that the echo depends only on the
/// physics and the seed.
std::vector<std::pair<std::string, std::string>> echo(const RunConfig& cfg);
std::string to_text(const RunConfig& cfg);

std::vector<std::string_view> known_keys();

}  // namespace qgfc::app
