#include "qgfc/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <fmt/format.h>

#include "qgfc/error.hpp"

namespace qgfc::io {
namespace {

template <typename T>
void put_le(std::string& out, T value) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.append(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(const std::string& in, std::size_t pos) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line) {
  field = trim(field);
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw IoError(fmt::format("line {}: cannot parse '{}'", line, field));
  return value;
}

}  // namespace

std::string curve_csv(const CorrelationCurve& curve) {
  std::string out = "tau_s,g2\n";
  out.reserve(curve.tau.size() * 40);
  for (std::size_t i = 0; i < curve.tau.size(); ++i)
    fmt::format_to(std::back_inserter(out), "{:.11e},{:.11e}\n", curve.tau[i], curve.values[i]);
  return out;
}

std::string curve_stderr_csv(const CorrelationCurve& curve) {
  std::string out = "tau_s,g2_stderr\n";
  for (std::size_t i = 0; i < curve.tau.size() && i < curve.std_errors.size(); ++i)
    fmt::format_to(std::back_inserter(out), "{:.11e},{:.11e}\n", curve.tau[i], curve.std_errors[i]);
  return out;
}

std::string histogram_csv(const CoincidenceHistogram& hist) {
  std::string out = "tau_bin_center_s,count\n";
  out.reserve(hist.bins() * 32);
  for (std::size_t i = 0; i < hist.bins(); ++i)
    fmt::format_to(std::back_inserter(out), "{:.16e},{}\n", hist.bin_center(i), hist.counts[i]);
  return out;
}

CoincidenceHistogram parse_histogram_csv(const std::string& text) {
  std::vector<double> centers;
  std::vector<std::uint64_t> counts;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto row = trim(line);
    if (row.empty()) continue;
    if (lineno == 1) {
      if (row != "tau_bin_center_s,count")
        throw IoError(fmt::format("unexpected histogram header '{}'", row));
      continue;
    }
    const auto comma = row.find(',');
    if (comma == std::string_view::npos) throw IoError(fmt::format("line {}: expected 2 columns", lineno));
    centers.push_back(parse_number<double>(row.substr(0, comma), lineno));
    counts.push_back(parse_number<std::uint64_t>(row.substr(comma + 1), lineno));
  }
  if (centers.size() < 2) throw IoError("histogram CSV needs at least 2 bins");
  const double width = (centers.back() - centers.front()) / static_cast<double>(centers.size() - 1);
  if (!(width > 0.0)) throw IoError("histogram bin centres must increase");
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double expected = centers.front() + static_cast<double>(i) * width;
    if (std::abs(centers[i] - expected) > 1e-6 * width)
      throw IoError(fmt::format("histogram bin centres are not uniform at row {}", i + 2));
  }
  CoincidenceHistogram h;
  h.bin_width = width;
  h.tau_min = centers.front() - 0.5 * width;
  h.tau_max = h.tau_min + static_cast<double>(centers.size()) * width;
  h.counts = std::move(counts);
  for (auto c : h.counts) h.total_pairs += c;
  return h;
}

std::string stream_csv(const EventStream& stream) {
  std::string out = "timestamp_s\n";
  out.reserve(stream.timestamps.size() * 26);
  for (double t : stream.timestamps) fmt::format_to(std::back_inserter(out), "{:.16e}\n", t);
  return out;
}

std::string stream_binary(const EventStream& stream) {
  if (stream.detector_id < 0 || stream.detector_id > 0xFFFF)
    throw InvalidArgument("detector_id does not fit the binary header");
  std::string out;
  out.reserve(16 + 8 * stream.timestamps.size());
  out.append("QGEV", 4);
  put_le<std::uint16_t>(out, kStreamFormatVersion);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(stream.detector_id));
  put_le<std::uint64_t>(out, stream.timestamps.size());
  for (double t : stream.timestamps) put_le<double>(out, t);
  return out;
}

EventStream parse_stream_binary(const std::string& bytes, std::optional<double> duration_s) {
  if (bytes.size() < 16 || bytes.compare(0, 4, "QGEV") != 0)
    throw IoError("not an event stream (bad magic)");
  const auto version = get_le<std::uint16_t>(bytes, 4);
  if (version != kStreamFormatVersion)
    throw IoError(fmt::format("unsupported event stream version {}", version));
  EventStream s;
  s.detector_id = get_le<std::uint16_t>(bytes, 6);
  const auto count = get_le<std::uint64_t>(bytes, 8);
  if (count > (bytes.size() - 16) / 8 || bytes.size() != 16 + 8 * count)
    throw IoError(fmt::format("event stream size mismatch: header says {} events, payload has {} bytes",
                              count, bytes.size() - 16));
  s.timestamps.resize(count);
  for (std::size_t i = 0; i < count; ++i) s.timestamps[i] = get_le<double>(bytes, 16 + 8 * i);
  if (duration_s) {
    s.duration_s = *duration_s;
  } else {
    s.duration_s = s.timestamps.empty() ? 0.0 : std::nextafter(s.timestamps.back(), INFINITY);
  }
  if (s.duration_s > 0.0) s.rate_hz = static_cast<double>(count) / s.duration_s;
  validate(s);
  return s;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("{}: cannot open for writing", path.string()));
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError(fmt::format("{}: write failed", path.string()));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("{}: cannot open for reading", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CoincidenceHistogram read_histogram_csv(const std::filesystem::path& path) {
  try {
    return parse_histogram_csv(read_file(path));
  } catch (const IoError& e) {
    const std::string what = e.what();
    if (what.starts_with(path.string())) throw;
    throw IoError(fmt::format("{}: {}", path.string(), what));
  }
}

EventStream read_stream_binary(const std::filesystem::path& path, std::optional<double> duration_s) {
  try {
    return parse_stream_binary(read_file(path), duration_s);
  } catch (const IoError& e) {
    const std::string what = e.what();
    if (what.starts_with(path.string())) throw;
    throw IoError(fmt::format("{}: {}", path.string(), what));
  }
}

}  // namespace qgfc::io
