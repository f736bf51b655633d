#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qgfc/app/config.hpp"

namespace qgfc::app {

struct OutputFile {
  std::string name;  // relative to the output directory
  std::uintmax_t bytes = 0;
};

struct CommandResult {
  /// 0 when every requested output was written and every internal check
  /// passed; 3 when outputs were written but an analysis step failed.
  int exit_code = 0;
  std::string summary_line;
  std::vector<OutputFile> outputs;
};

/// CorrelationCurve CSV and JSON summary; method "all" adds a comparison CSV.
CommandResult cmd_curve(const RunConfig& cfg);

/// Streams, histogram, contrast, comb fit, summary and manifest.
CommandResult cmd_simulate(const RunConfig& cfg);

/// Oracle-vs-closed-form table, fidelity report and phase-randomized baseline.
CommandResult cmd_oracle(const RunConfig& cfg);

/// Peak detection and comb fit on an existing "tau_bin_center_s,count" CSV.
/// The optional sidecar JSON supplies lattice and geometry; otherwise they
/// come from the config.
CommandResult cmd_fit(const RunConfig& cfg, const std::filesystem::path& histogram_csv,
                      const std::optional<std::filesystem::path>& sidecar_json);

}  // namespace qgfc::app
