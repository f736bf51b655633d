#include "qgfc/app/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>

#include <fmt/format.h>

#include "qgfc/correlation.hpp"
#include "qgfc/io.hpp"

namespace qgfc::app {
namespace {

std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_as(std::string_view key, std::string_view text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if constexpr (std::is_floating_point_v<T>) {
    if (!text.empty() && text.front() == '+') ++first;
  }
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || text.empty())
    throw ConfigError(fmt::format("config key '{}': cannot parse '{}'", key, text));
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value))
      throw ConfigError(fmt::format("config key '{}': value must be finite", key));
  }
  return value;
}

std::string show(double v) { return fmt::format("{:.17g}", v); }
std::string show(std::int64_t v) { return std::to_string(v); }
std::string show(std::uint64_t v) { return std::to_string(v); }
std::string show(const std::string& v) { return v; }
template <typename T>
std::string show(const std::optional<T>& v) {
  return v ? show(*v) : std::string("auto");
}

struct Field {
  std::function<void(RunConfig&, std::string_view key, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
  bool echoed = true;
};

template <typename T>
Field field(T RunConfig::*member, bool echoed = true) {
  Field f;
  f.set = [member](RunConfig& c, std::string_view key, std::string_view v) {
    if constexpr (std::is_same_v<T, std::string>) {
      c.*member = std::string(v);
    } else if constexpr (std::is_same_v<T, std::optional<double>> ||
                         std::is_same_v<T, std::optional<std::int64_t>>) {
      if (v == "auto")
        c.*member = std::nullopt;
      else
        c.*member = parse_as<typename T::value_type>(key, v);
    } else {
      c.*member = parse_as<T>(key, v);
    }
  };
  f.get = [member](const RunConfig& c) { return show(c.*member); };
  f.echoed = echoed;
  return f;
}

const std::vector<std::pair<std::string_view, Field>>& registry() {
  static const std::vector<std::pair<std::string_view, Field>> r = {
      {"n_modes", field(&RunConfig::n_modes)},
      {"nu_b_hz", field(&RunConfig::nu_b_hz)},
      {"nu_s0_hz", field(&RunConfig::nu_s0_hz)},
      {"delta_nu_hz", field(&RunConfig::delta_nu_hz)},
      {"nu_p_hz", field(&RunConfig::nu_p_hz)},
      {"r1_m", field(&RunConfig::r1_m)},
      {"r2_m", field(&RunConfig::r2_m)},
      {"c_mps", field(&RunConfig::c_mps)},
      {"tau_min_s", field(&RunConfig::tau_min_s)},
      {"tau_max_s", field(&RunConfig::tau_max_s)},
      {"n_points", field(&RunConfig::n_points)},
      {"method", field(&RunConfig::method)},
      {"mc_realizations", field(&RunConfig::mc_realizations)},
      {"pair_rate_hz", field(&RunConfig::pair_rate_hz)},
      {"duration_s", field(&RunConfig::duration_s)},
      {"jitter_s", field(&RunConfig::jitter_s)},
      {"window_periods", field(&RunConfig::window_periods)},
      {"accidental_rate_hz", field(&RunConfig::accidental_rate_hz)},
      {"stream_output", field(&RunConfig::stream_output)},
      {"bin_width_s", field(&RunConfig::bin_width_s)},
      {"hist_tau_min_s", field(&RunConfig::hist_tau_min_s)},
      {"hist_tau_max_s", field(&RunConfig::hist_tau_max_s)},
      {"min_prominence", field(&RunConfig::min_prominence)},
      {"contrast_min_counts", field(&RunConfig::contrast_min_counts)},
      {"oracle_pairs", field(&RunConfig::oracle_pairs)},
      {"oracle_cutoff", field(&RunConfig::oracle_cutoff)},
      {"oracle_points", field(&RunConfig::oracle_points)},
      {"fidelity_n", field(&RunConfig::fidelity_n)},
      {"fidelity_cutoff", field(&RunConfig::fidelity_cutoff)},
      {"seed", field(&RunConfig::seed)},
      {"out_dir", field(&RunConfig::out_dir, false)},
      {"threads", field(&RunConfig::threads, false)},
  };
  return r;
}

void require(bool ok, std::string_view key, std::string_view what) {
  if (!ok) throw ConfigError(fmt::format("config key '{}': {}", key, what));
}

}  // namespace

void set_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  const auto& r = registry();
  const auto it = std::find_if(r.begin(), r.end(), [&](const auto& e) { return e.first == key; });
  if (it == r.end()) throw ConfigError(fmt::format("unknown config key '{}'", key));
  it->second.set(cfg, key, trim(value));
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::size_t lineno = 0;
  while (!text.empty()) {
    ++lineno;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(fmt::format("config line {}: expected key = value", lineno));
    set_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  const std::string text = io::read_file(path);
  try {
    return parse_config(text, std::move(base));
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void validate(const RunConfig& c) {
  require(c.n_modes >= 1, "n_modes", "must be >= 1");
  require(c.nu_b_hz > 0.0, "nu_b_hz", "must be > 0");
  require(c.nu_s0_hz > 0.0, "nu_s0_hz", "must be > 0");
  require(c.delta_nu_hz >= 0.0, "delta_nu_hz", "must be >= 0");
  require(c.delta_nu_hz < c.nu_b_hz, "delta_nu_hz", "must be below nu_b_hz");
  require(!c.nu_p_hz || *c.nu_p_hz > 0.0, "nu_p_hz", "must be > 0");
  require(c.c_mps > 0.0, "c_mps", "must be > 0");
  require(c.n_points >= 2, "n_points", "must be >= 2");
  if (c.tau_min_s && c.tau_max_s) require(*c.tau_min_s < *c.tau_max_s, "tau_max_s", "must exceed tau_min_s");
  require(c.method == "all" || c.method == "direct" || c.method == "closed" || c.method == "mc" ||
              c.method == "fock",
          "method", "must be one of direct|closed|mc|fock|all");
  require(c.mc_realizations >= 1, "mc_realizations", "must be >= 1");
  require(c.pair_rate_hz > 0.0, "pair_rate_hz", "must be > 0");
  require(c.duration_s > 0.0, "duration_s", "must be > 0");
  require(c.jitter_s >= 0.0, "jitter_s", "must be >= 0");
  require(c.window_periods > 0.0, "window_periods", "must be > 0");
  require(c.accidental_rate_hz >= 0.0, "accidental_rate_hz", "must be >= 0");
  require(c.stream_output == "none" || c.stream_output == "binary" || c.stream_output == "csv" ||
              c.stream_output == "both",
          "stream_output", "must be one of none|binary|csv|both");
  require(!c.bin_width_s || *c.bin_width_s > 0.0, "bin_width_s", "must be > 0");
  if (c.hist_tau_min_s && c.hist_tau_max_s)
    require(*c.hist_tau_min_s < *c.hist_tau_max_s, "hist_tau_max_s", "must exceed hist_tau_min_s");
  require(c.min_prominence > 0.0 && c.min_prominence <= 1.0, "min_prominence", "must be in (0, 1]");
  require(c.contrast_min_counts >= 1, "contrast_min_counts", "must be >= 1");
  require(c.oracle_pairs >= 1 && c.oracle_pairs <= 4, "oracle_pairs", "must be in [1, 4]");
  require(c.oracle_cutoff >= 1 && c.oracle_cutoff <= 12, "oracle_cutoff", "must be in [1, 12]");
  require(c.oracle_points >= 2, "oracle_points", "must be >= 2");
  require(c.fidelity_n >= 0 && c.fidelity_n <= 170, "fidelity_n", "must be in [0, 170]");
  require(!c.fidelity_cutoff || *c.fidelity_cutoff >= 0, "fidelity_cutoff", "must be >= 0");
  require(c.threads >= 0, "threads", "must be >= 0");
  require(!c.out_dir.empty(), "out_dir", "must not be empty");
  try {
    make_lattice(c);
    validate(make_geometry(c));
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(fmt::format("config: {}", e.what()));
  }
}

ModeLattice make_lattice(const RunConfig& c) {
  ModeLattice::Params p;
  p.n_modes = c.n_modes;
  p.nu_b_hz = c.nu_b_hz;
  p.nu_s0_hz = c.nu_s0_hz;
  p.delta_nu_hz = c.delta_nu_hz;
  p.nu_p_hz = c.nu_p_hz;
  return ModeLattice(p);
}

DetectorGeometry make_geometry(const RunConfig& c) { return {c.r1_m, c.r2_m, c.c_mps}; }

std::vector<std::pair<std::string, std::string>> echo(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [key, f] : registry())
    if (f.echoed) out.emplace_back(std::string(key), f.get(cfg));
  return out;
}

std::string to_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : echo(cfg)) out += fmt::format("{} = {}\n", k, v);
  return out;
}

std::vector<std::string_view> known_keys() {
  std::vector<std::string_view> keys;
  for (const auto& e : registry()) keys.push_back(e.first);
  return keys;
}

}  // namespace qgfc::app
