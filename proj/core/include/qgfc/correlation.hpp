#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "qgfc/lattice.hpp"

namespace qgfc {

/// sin^2(N x/2) / sin^2(x/2), continuous at x = 2*pi*k where it equals N^2.
double dirichlet_kernel(std::int64_t n_modes, double x_rad);

/// Same kernel with the phase given in turns (x = 2*pi*turns).  Preferred
/// internally: a turn count from nu_b * tau reduces modulo 1 without error.
double dirichlet_kernel_turns(std::int64_t n_modes, double turns);

/// Signed sin(N x/2) / (N sin(x/2)) in turns; its zeros are the kernel's zeros.
double dirichlet_amplitude_turns(std::int64_t n_modes, double turns);

/// sin(x)/x with sinc(0) = 1.
double sinc(double x);

/// Effective two-photon amplitude
///   exp(-i w_p (tau1+tau2)/2) * sum_{n<N} exp(-i n w_b (tau1 - tau2))
/// by explicit compensated summation.  Requires delta_nu == 0.
std::complex<double> psi_direct(const ModeLattice& lattice, double tau1, double tau2);

/// As psi_direct with a per-mode amplitude profile f(n) (size N).  The flat
/// profile f(n) = 1 reproduces psi_direct.
std::complex<double> psi_direct(const ModeLattice& lattice, std::span<const double> mode_weights,
                                double tau1, double tau2);

/// Peak-normalized closed form
///   sinc^2(dw tau/2) * dirichlet(N, w_b tau) / N^2.
double g2_closed(const ModeLattice& lattice, double tau);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo evaluation of the finite-linewidth correlation.
///
/// Each realization draws an independent creation time t0_n for every mode
/// pair, uniform over a window reaching 50/delta_nu beyond both detection
/// times (100/delta_nu at tau = 0), centred on the detection midpoint.  Pair n
/// contributes the overlap of its signal and idler wave packets (rectangular
/// spectrum of width delta_omega, i.e. sinc envelopes in time) at
/// (tau1, tau2) = (tau/2, -tau/2), with the comb phase exp(-i n w_b tau).
/// The part of the overlap integral outside the window is added exactly, so
/// each per-realization amplitude is an unbiased sample of the full
/// creation-time convolution.  The returned mean is the unbiased estimate
/// |<A>|^2 - var(A)/R of its squared modulus.  Realizations are split into
/// fixed chunks seeded by derive_seed(seed, "mc_envelope", chunk), so the
/// result does not depend on `threads`.
McEstimate g2_mc_envelope(const ModeLattice& lattice, double tau, std::int64_t n_realizations,
                          std::uint64_t seed, unsigned threads = 1);

/// (t1 - t2)_n = n/nu_b + (r1 - r2)/c for n in [n_first, n_last].
std::vector<double> comb_peak_positions(const ModeLattice& lattice, const DetectorGeometry& geom,
                                        std::int64_t n_first, std::int64_t n_last);

/// Peak maximum to first adjacent zero, 1/(nu_b N).  Requires N >= 2.
double comb_peak_width(const ModeLattice& lattice);

struct EnvelopeWidths {
  double first_zero_s;  // 1/delta_nu
  double fwhm_s;        // full width at half maximum of sinc^2(pi delta_nu tau)
};

/// Requires delta_nu > 0.
EnvelopeWidths envelope_widths(const ModeLattice& lattice);

/// Refines the g2_closed maximum nearest `tau_guess` (retarded delay).
double locate_peak(const ModeLattice& lattice, double tau_guess);

/// First zero of g2_closed after the peak at `tau_peak`, found by bisection
/// on the signed amplitude.  Requires N >= 2.
double first_zero_after(const ModeLattice& lattice, double tau_peak);

enum class CurveMethod { direct, closed, mc_envelope, fock_oracle };
enum class Normalization { raw, peak };

std::string_view to_string(CurveMethod m) noexcept;
std::string_view to_string(Normalization n) noexcept;
/// Accepts direct|closed|mc|mc_envelope|fock|fock_oracle.
CurveMethod parse_curve_method(std::string_view name);

struct CurveOptions {
  std::int64_t mc_realizations = 10'000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  int oracle_cutoff = 2;
};

/// A uniformly sampled G2 curve.  `tau` holds t1 - t2; evaluation happens at
/// the retarded delay tau - (r1 - r2)/c.
struct CorrelationCurve {
  std::vector<double> tau;
  std::vector<double> values;
  std::vector<double> std_errors;  // filled for mc_envelope only
  Normalization normalization = Normalization::peak;
  CurveMethod method = CurveMethod::closed;
  ModeLattice lattice;
  DetectorGeometry geometry;
  std::optional<std::int64_t> mc_realizations;
  std::optional<std::uint64_t> seed;
};

CorrelationCurve curve(const ModeLattice& lattice, const DetectorGeometry& geom, double tau_min,
                       double tau_max, std::int64_t n_points, CurveMethod method,
                       const CurveOptions& options = {});

}  // namespace qgfc
