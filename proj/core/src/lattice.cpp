#include "qgfc/lattice.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "qgfc/error.hpp"

namespace qgfc {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument("mode lattice: " + what);
}

}  // namespace

ModeLattice::ModeLattice(const Params& p)
    : n_modes_(p.n_modes),
      nu_b_(p.nu_b_hz),
      nu_s0_(p.nu_s0_hz),
      nu_p_(p.nu_p_hz.value_or(2.0 * p.nu_s0_hz)),
      delta_nu_(p.delta_nu_hz),
      profile_(p.profile) {
  require(n_modes_ >= 1, "n_modes must be >= 1");
  require(std::isfinite(nu_b_) && nu_b_ > 0.0, "nu_b must be finite and > 0");
  require(std::isfinite(nu_s0_) && nu_s0_ > 0.0, "nu_s0 must be finite and > 0");
  require(std::isfinite(delta_nu_) && delta_nu_ >= 0.0, "delta_nu must be finite and >= 0");
  require(delta_nu_ < nu_b_, "delta_nu must be smaller than nu_b (modes may not overlap)");
  // Degenerate OPO: pump sits at twice the common signal/idler centre.
  require(std::abs(nu_p_ - 2.0 * nu_s0_) <= 1e-12 * nu_p_, "nu_p must equal 2*nu_s0");
  nu_p_ = 2.0 * nu_s0_;
}

double ModeLattice::omega_b() const noexcept { return 2.0 * std::numbers::pi * nu_b_; }
double ModeLattice::delta_omega() const noexcept { return 2.0 * std::numbers::pi * delta_nu_; }

ModeLattice::Params ModeLattice::params() const {
  Params p;
  p.n_modes = n_modes_;
  p.nu_b_hz = nu_b_;
  p.nu_s0_hz = nu_s0_;
  p.delta_nu_hz = delta_nu_;
  p.nu_p_hz = nu_p_;
  p.profile = profile_;
  return p;
}

std::vector<ModePair> mode_frequencies(const ModeLattice& lattice) {
  std::vector<ModePair> out;
  out.reserve(static_cast<std::size_t>(lattice.n_modes()));
  for (std::int64_t n = 0; n < lattice.n_modes(); ++n) {
    const double ds = lattice.signal_detuning(n);
    const double di = lattice.idler_detuning(n);
    // nu_p - nu_s0 == nu_s0 exactly, so the idler is the mirror of the signal.
    out.push_back({n, lattice.nu_s0() + ds, lattice.nu_s0() + di, ds, di});
  }
  return out;
}

void validate(const DetectorGeometry& geom) {
  if (!std::isfinite(geom.r1_m) || !std::isfinite(geom.r2_m))
    throw InvalidArgument("detector geometry: r1 and r2 must be finite");
  if (!std::isfinite(geom.c_mps) || geom.c_mps <= 0.0)
    throw InvalidArgument("detector geometry: c must be finite and > 0");
}

double retarded_tau(const DetectorGeometry& geom, double t1, double t2) noexcept {
  return (t1 - t2) - geom.retarded_offset();
}

}  // namespace qgfc
