#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "qgfc/correlation.hpp"
#include "qgfc/detection.hpp"

namespace qgfc::io {

/// "tau_s,g2" rows, scientific notation with 12 significant digits.
std::string curve_csv(const CorrelationCurve& curve);
/// "tau_s,g2_stderr"; only meaningful for Monte-Carlo curves.
std::string curve_stderr_csv(const CorrelationCurve& curve);

/// "tau_bin_center_s,count".
std::string histogram_csv(const CoincidenceHistogram& hist);
/// Inverse of histogram_csv.  Bin width and range are recovered from the
/// centres, which must be uniformly spaced; metadata is left empty.
CoincidenceHistogram parse_histogram_csv(const std::string& text);

/// "timestamp_s" rows with 17 significant digits (round-trips exactly).
std::string stream_csv(const EventStream& stream);

/// 16-byte header ("QGEV", u16 version = 1, u16 detector id, u64 count)
/// followed by little-endian float64 timestamps.
std::string stream_binary(const EventStream& stream);
/// duration_s is not stored; when absent it is set just past the last event.
EventStream parse_stream_binary(const std::string& bytes, std::optional<double> duration_s = {});

inline constexpr std::uint16_t kStreamFormatVersion = 1;

/// Whole-file helpers; failures raise IoError naming the path.
void write_file(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

CoincidenceHistogram read_histogram_csv(const std::filesystem::path& path);
EventStream read_stream_binary(const std::filesystem::path& path,
                               std::optional<double> duration_s = {});

}  // namespace qgfc::io
