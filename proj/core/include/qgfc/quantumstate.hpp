#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qgfc/lattice.hpp"

namespace qgfc {

using Complex = std::complex<double>;

/// Two-mode (signal, idler) state truncated at `cutoff` photons per mode.
///
/// Amplitudes are stored row-major over (m_s, m_i).  States produced by the
/// perturbative pair expansion occupy only the diagonal |m>_s|m>_i; coherent
/// products fill the whole square.  Amplitudes are kept normalized on the
/// truncated space; norm_deficit() records the weight lost to truncation.
class TruncatedPairState {
 public:
  /// Normalizes `amplitudes` (size (cutoff+1)^2).  Throws on a zero vector.
  TruncatedPairState(int cutoff, std::vector<Complex> amplitudes, double norm_deficit = 0.0);

  static TruncatedPairState vacuum(int cutoff);
  static TruncatedPairState basis(int cutoff, int m_s, int m_i);

  int cutoff() const noexcept { return cutoff_; }
  std::size_t side() const noexcept { return static_cast<std::size_t>(cutoff_) + 1; }
  Complex amplitude(int m_s, int m_i) const;
  std::span<const Complex> amplitudes() const noexcept { return amplitudes_; }
  double norm_deficit() const noexcept { return norm_deficit_; }
  bool is_diagonal() const noexcept;
  double mean_pair_number() const noexcept;  // <n_s>

 private:
  int cutoff_;
  std::vector<Complex> amplitudes_;
  double norm_deficit_;
};

/// Result of expanding [|0> + a_s^+ a_i^+ |0>]^n.
struct PerturbationState {
  int interactions;
  TruncatedPairState state;
  /// Unnormalized coefficient on |m,m>: binom(n,m) * m! = n!/(n-m)!, zero for m > n.
  std::vector<double> raw;
  /// log of raw (−inf where raw is zero).
  std::vector<double> log_raw;
  double mean_pair_number;
};

/// Throws RangeError when a raw coefficient is not representable as a double.
PerturbationState build_perturbation_state(int interactions, int cutoff);

/// |alpha_s>|alpha_i> restricted to `cutoff`.  Throws RangeError when the
/// truncated norm falls below 1 - 1e-9.
TruncatedPairState build_coherent_product(Complex alpha_s, Complex alpha_i, int cutoff);
inline TruncatedPairState build_coherent_product(Complex alpha, int cutoff) {
  return build_coherent_product(alpha, alpha, cutoff);
}

/// |<a|b>|^2 of the normalized states.  Cutoffs must match.
double state_fidelity(const TruncatedPairState& a, const TruncatedPairState& b);

inline constexpr std::size_t kDefaultBasisCap = 1'000'000;
inline constexpr int kMaxOraclePairs = 4;
inline constexpr int kMaxOracleCutoff = 12;

/// Pure state of P signal/idler mode pairs in a truncated Fock space of
/// dimension (cutoff+1)^(2P).  Mode 2k is the signal of pair k, mode 2k+1
/// its idler; mode 0 is the most significant digit of the basis index.
class MultiPairState {
 public:
  struct Occupation {
    std::vector<int> pair_photons;  // m_k for each pair, meaning |m_k>_s|m_k>_i
    Complex amplitude;
  };

  /// Tensor product of independent pair states (all with the same cutoff).
  static MultiPairState product(std::span<const TruncatedPairState> pairs,
                                std::size_t basis_cap = kDefaultBasisCap);

  /// Superposition of diagonal occupation tuples.
  static MultiPairState from_occupations(int pair_count, int cutoff,
                                         std::span<const Occupation> terms,
                                         std::size_t basis_cap = kDefaultBasisCap);

  /// sum_k a_k a_s^+(k) a_i^+(k) |0>: one pair excitation shared coherently
  /// across all P pairs, each pair phase-matched to the pump.
  static MultiPairState entangled_pairs(std::span<const Complex> pair_amplitudes, int cutoff,
                                        std::size_t basis_cap = kDefaultBasisCap);

  int pair_count() const noexcept { return pair_count_; }
  int cutoff() const noexcept { return cutoff_; }
  std::size_t dimension() const noexcept { return amplitudes_.size(); }
  std::span<const Complex> amplitudes() const noexcept { return amplitudes_; }

  MultiPairState with_global_phase(double radians) const;

 private:
  MultiPairState(int pair_count, int cutoff, std::vector<Complex> amplitudes);

  int pair_count_;
  int cutoff_;
  std::vector<Complex> amplitudes_;
};

/// (cutoff+1)^(2*pair_count); throws RangeError above `basis_cap`.
std::size_t fock_dimension(int pair_count, int cutoff, std::size_t basis_cap = kDefaultBasisCap);

/// <Psi| E1^- E2^- E2^+ E1^+ |Psi> by explicit operator algebra, with
/// E1^+ = sum_k exp(-i w_s(k) tau1) a_s(k) on detector 1 and
/// E2^+ = sum_k exp(-i w_i(k) tau2) a_i(k) on detector 2.
/// Field constants and the optical carrier phase are dropped.
/// Requires lattice.n_modes() == pair_count and delta_nu == 0.
double g2_fock_oracle(const MultiPairState& state, const ModeLattice& lattice, double tau1,
                      double tau2);

}  // namespace qgfc
