#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace qgfc {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s

enum class SpectralProfile { rectangular };

/// Frequency grid of a degenerate multi-longitudinal-mode OPO.
///
/// Pair n (0 <= n < N) has signal detuning +n*nu_b and idler detuning
/// -n*nu_b about the common central frequency nu_s0, so every pair sums to
/// the pump frequency nu_p = 2*nu_s0.  Detunings are what the evaluators
/// use; absolute optical frequencies are only materialized on request.
class ModeLattice {
 public:
  struct Params {
    std::int64_t n_modes = 1;
    double nu_b_hz = 20e3;
    double nu_s0_hz = 193.4e12;
    double delta_nu_hz = 0.0;
    /// Defaults to 2*nu_s0; if given it must match that value.
    std::optional<double> nu_p_hz;
    SpectralProfile profile = SpectralProfile::rectangular;
  };

  /// Throws InvalidArgument when an invariant is violated.
  explicit ModeLattice(const Params& params);

  std::int64_t n_modes() const noexcept { return n_modes_; }
  double nu_b() const noexcept { return nu_b_; }
  double nu_s0() const noexcept { return nu_s0_; }
  double nu_p() const noexcept { return nu_p_; }
  double delta_nu() const noexcept { return delta_nu_; }
  SpectralProfile profile() const noexcept { return profile_; }

  double omega_b() const noexcept;
  double delta_omega() const noexcept;

  /// Comb period 1/nu_b in seconds.
  double period() const noexcept { return 1.0 / nu_b_; }

  double signal_detuning(std::int64_t n) const noexcept { return static_cast<double>(n) * nu_b_; }
  double idler_detuning(std::int64_t n) const noexcept { return -static_cast<double>(n) * nu_b_; }

  Params params() const;

  friend bool operator==(const ModeLattice&, const ModeLattice&) = default;

 private:
  std::int64_t n_modes_;
  double nu_b_;
  double nu_s0_;
  double nu_p_;
  double delta_nu_;
  SpectralProfile profile_;
};

struct ModePair {
  std::int64_t index;
  double signal_hz;
  double idler_hz;
  double signal_detuning_hz;
  double idler_detuning_hz;
};

/// All N (signal, idler) pairs in index order.
std::vector<ModePair> mode_frequencies(const ModeLattice& lattice);

/// Longitudinal detector positions and propagation speed.
struct DetectorGeometry {
  double r1_m = 0.0;
  double r2_m = 0.0;
  double c_mps = kSpeedOfLight;

  /// (r1 - r2)/c, the geometric delay of the central comb peak.
  double retarded_offset() const noexcept { return (r1_m - r2_m) / c_mps; }

  friend bool operator==(const DetectorGeometry&, const DetectorGeometry&) = default;
};

/// Throws InvalidArgument for non-finite positions or non-positive c.
void validate(const DetectorGeometry& geom);

/// tau = (t1 - r1/c) - (t2 - r2/c).
double retarded_tau(const DetectorGeometry& geom, double t1, double t2) noexcept;

}  // namespace qgfc
