#include "qgfc/quantumstate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "phase.hpp"
#include "qgfc/error.hpp"

namespace qgfc {
namespace {

double squared_norm(std::span<const Complex> v) {
  double s = 0.0;
  for (const Complex& z : v) s += std::norm(z);
  return s;
}

void require_cutoff(int cutoff) {
  if (cutoff < 0) throw InvalidArgument("cutoff must be >= 0");
}

}  // namespace

TruncatedPairState::TruncatedPairState(int cutoff, std::vector<Complex> amplitudes,
                                       double norm_deficit)
    : cutoff_(cutoff), amplitudes_(std::move(amplitudes)), norm_deficit_(norm_deficit) {
  require_cutoff(cutoff);
  if (amplitudes_.size() != side() * side())
    throw InvalidArgument("pair state: amplitude count must be (cutoff+1)^2");
  const double n2 = squared_norm(amplitudes_);
  if (!(n2 > 0.0) || !std::isfinite(n2)) throw InvalidArgument("pair state: zero or non-finite norm");
  const double inv = 1.0 / std::sqrt(n2);
  for (Complex& z : amplitudes_) z *= inv;
}

TruncatedPairState TruncatedPairState::vacuum(int cutoff) { return basis(cutoff, 0, 0); }

TruncatedPairState TruncatedPairState::basis(int cutoff, int m_s, int m_i) {
  require_cutoff(cutoff);
  if (m_s < 0 || m_i < 0 || m_s > cutoff || m_i > cutoff)
    throw InvalidArgument("pair state: occupation exceeds cutoff");
  const std::size_t side = static_cast<std::size_t>(cutoff) + 1;
  std::vector<Complex> amps(side * side);
  amps[static_cast<std::size_t>(m_s) * side + static_cast<std::size_t>(m_i)] = 1.0;
  return TruncatedPairState(cutoff, std::move(amps));
}

Complex TruncatedPairState::amplitude(int m_s, int m_i) const {
  if (m_s < 0 || m_i < 0 || m_s > cutoff_ || m_i > cutoff_) return 0.0;
  return amplitudes_[static_cast<std::size_t>(m_s) * side() + static_cast<std::size_t>(m_i)];
}

bool TruncatedPairState::is_diagonal() const noexcept {
  for (std::size_t s = 0; s < side(); ++s)
    for (std::size_t i = 0; i < side(); ++i)
      if (s != i && amplitudes_[s * side() + i] != Complex{}) return false;
  return true;
}

double TruncatedPairState::mean_pair_number() const noexcept {
  double mean = 0.0;
  for (std::size_t s = 0; s < side(); ++s)
    for (std::size_t i = 0; i < side(); ++i)
      mean += static_cast<double>(s) * std::norm(amplitudes_[s * side() + i]);
  return mean;
}

PerturbationState build_perturbation_state(int interactions, int cutoff) {
  if (interactions < 0) throw InvalidArgument("perturbation state: interaction count must be >= 0");
  require_cutoff(cutoff);
  const int n = interactions;
  const std::size_t side = static_cast<std::size_t>(cutoff) + 1;
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  // binom(n,m) * m! = n!/(n-m)!, the falling factorial.
  std::vector<double> log_raw(side, kNegInf);
  const int top = std::min(n, cutoff);
  for (int m = 0; m <= top; ++m)
    log_raw[static_cast<std::size_t>(m)] = std::lgamma(n + 1.0) - std::lgamma(n - m + 1.0);

  const double log_max = *std::max_element(log_raw.begin(), log_raw.end());
  if (log_max > std::log(std::numeric_limits<double>::max()))
    throw RangeError("perturbation state: coefficient n!/(n-m)! overflows a double for n=" +
                     std::to_string(n) + ", cutoff=" + std::to_string(cutoff));

  std::vector<double> raw(side, 0.0);
  for (int m = 0; m <= top; ++m) {
    // Exact integer product while it fits in 2^53, log-space beyond.
    double v = 1.0;
    bool exact = true;
    for (int j = 0; j < m && exact; ++j) {
      v *= static_cast<double>(n - j);
      exact = v < 9007199254740992.0;
    }
    raw[static_cast<std::size_t>(m)] = exact ? v : std::exp(log_raw[static_cast<std::size_t>(m)]);
  }

  std::vector<Complex> amps(side * side);
  for (std::size_t m = 0; m < side; ++m)
    if (log_raw[m] != kNegInf) amps[m * side + m] = std::exp(log_raw[m] - log_max);

  TruncatedPairState state(cutoff, std::move(amps));
  const double mean = state.mean_pair_number();
  return {n, std::move(state), std::move(raw), std::move(log_raw), mean};
}

TruncatedPairState build_coherent_product(Complex alpha_s, Complex alpha_i, int cutoff) {
  require_cutoff(cutoff);
  const std::size_t side = static_cast<std::size_t>(cutoff) + 1;

  // Single-mode weight lost above the cutoff: P(n > M) for n ~ Poisson(|alpha|^2).
  auto lost = [cutoff](Complex a) {
    const double lambda = std::norm(a);
    return lambda == 0.0 ? 0.0 : boost::math::gamma_p(cutoff + 1.0, lambda);
  };
  const double lost_s = lost(alpha_s);
  const double lost_i = lost(alpha_i);
  const double deficit = lost_s + lost_i - lost_s * lost_i;
  if (deficit > 1e-9)
    throw RangeError("coherent product: cutoff " + std::to_string(cutoff) +
                     " truncates norm by " + std::to_string(deficit) + " (> 1e-9)");

  auto coefficients = [side](Complex a) {
    std::vector<Complex> c(side);
    const double mag = std::abs(a);
    const double phase = std::arg(a);
    for (std::size_t m = 0; m < side; ++m) {
      if (m == 0) {
        c[m] = std::exp(-0.5 * mag * mag);
      } else if (mag > 0.0) {
        const double md = static_cast<double>(m);
        const double logc = -0.5 * mag * mag + md * std::log(mag) - 0.5 * std::lgamma(md + 1.0);
        c[m] = std::polar(std::exp(logc), md * phase);
      }
    }
    return c;
  };
  const auto cs = coefficients(alpha_s);
  const auto ci = coefficients(alpha_i);

  std::vector<Complex> amps(side * side);
  for (std::size_t s = 0; s < side; ++s)
    for (std::size_t i = 0; i < side; ++i) amps[s * side + i] = cs[s] * ci[i];
  return TruncatedPairState(cutoff, std::move(amps), deficit);
}

double state_fidelity(const TruncatedPairState& a, const TruncatedPairState& b) {
  if (a.cutoff() != b.cutoff())
    throw InvalidArgument("state_fidelity: cutoff mismatch (" + std::to_string(a.cutoff()) +
                          " vs " + std::to_string(b.cutoff()) + ")");
  detail::CompensatedSum overlap;
  const auto x = a.amplitudes();
  const auto y = b.amplitudes();
  for (std::size_t k = 0; k < x.size(); ++k) overlap.add(std::conj(x[k]) * y[k]);
  return std::clamp(std::norm(overlap.value()), 0.0, 1.0);
}

// ---------------------------------------------------------------------------

std::size_t fock_dimension(int pair_count, int cutoff, std::size_t basis_cap) {
  if (pair_count < 1) throw InvalidArgument("multi-pair state: pair_count must be >= 1");
  require_cutoff(cutoff);
  const std::size_t side = static_cast<std::size_t>(cutoff) + 1;
  std::size_t dim = 1;
  for (int j = 0; j < 2 * pair_count; ++j) {
    if (dim > basis_cap / side)
      throw RangeError("Fock basis (cutoff+1)^(2P) exceeds cap of " + std::to_string(basis_cap) +
                       " states (P=" + std::to_string(pair_count) +
                       ", cutoff=" + std::to_string(cutoff) + ")");
    dim *= side;
  }
  return dim;
}

MultiPairState::MultiPairState(int pair_count, int cutoff, std::vector<Complex> amplitudes)
    : pair_count_(pair_count), cutoff_(cutoff), amplitudes_(std::move(amplitudes)) {
  const double n2 = squared_norm(amplitudes_);
  if (!(n2 > 0.0) || !std::isfinite(n2))
    throw InvalidArgument("multi-pair state: zero or non-finite norm");
  const double inv = 1.0 / std::sqrt(n2);
  for (Complex& z : amplitudes_) z *= inv;
}

MultiPairState MultiPairState::product(std::span<const TruncatedPairState> pairs,
                                       std::size_t basis_cap) {
  if (pairs.empty()) throw InvalidArgument("multi-pair state: need at least one pair");
  const int cutoff = pairs.front().cutoff();
  for (const auto& p : pairs)
    if (p.cutoff() != cutoff) throw InvalidArgument("multi-pair state: cutoff mismatch");
  const int count = static_cast<int>(pairs.size());
  fock_dimension(count, cutoff, basis_cap);

  std::vector<Complex> amps{1.0};
  for (const auto& p : pairs) {
    const auto pa = p.amplitudes();
    std::vector<Complex> next(amps.size() * pa.size());
    for (std::size_t u = 0; u < amps.size(); ++u)
      for (std::size_t v = 0; v < pa.size(); ++v) next[u * pa.size() + v] = amps[u] * pa[v];
    amps = std::move(next);
  }
  return MultiPairState(count, cutoff, std::move(amps));
}

MultiPairState MultiPairState::from_occupations(int pair_count, int cutoff,
                                                std::span<const Occupation> terms,
                                                std::size_t basis_cap) {
  const std::size_t dim = fock_dimension(pair_count, cutoff, basis_cap);
  const std::size_t side = static_cast<std::size_t>(cutoff) + 1;
  std::vector<Complex> amps(dim);
  for (const auto& t : terms) {
    if (t.pair_photons.size() != static_cast<std::size_t>(pair_count))
      throw InvalidArgument("multi-pair state: occupation tuple has wrong length");
    std::size_t idx = 0;
    for (int m : t.pair_photons) {
      if (m < 0 || m > cutoff) throw InvalidArgument("multi-pair state: occupation exceeds cutoff");
      const auto mm = static_cast<std::size_t>(m);
      idx = (idx * side + mm) * side + mm;
    }
    amps[idx] += t.amplitude;
  }
  return MultiPairState(pair_count, cutoff, std::move(amps));
}

MultiPairState MultiPairState::entangled_pairs(std::span<const Complex> pair_amplitudes,
                                               int cutoff, std::size_t basis_cap) {
  if (cutoff < 1) throw InvalidArgument("entangled pair state: cutoff must be >= 1");
  const int count = static_cast<int>(pair_amplitudes.size());
  std::vector<Occupation> terms;
  terms.reserve(pair_amplitudes.size());
  for (int k = 0; k < count; ++k) {
    std::vector<int> m(static_cast<std::size_t>(count), 0);
    m[static_cast<std::size_t>(k)] = 1;
    terms.push_back({std::move(m), pair_amplitudes[static_cast<std::size_t>(k)]});
  }
  return from_occupations(count, cutoff, terms, basis_cap);
}

MultiPairState MultiPairState::with_global_phase(double radians) const {
  MultiPairState out = *this;
  const Complex ph = std::polar(1.0, radians);
  for (Complex& z : out.amplitudes_) z *= ph;
  return out;
}

namespace {

// out += sum_j coef[j] * a_{mode_j} in, for a set of modes.
void apply_annihilators(std::span<const Complex> in, std::span<Complex> out, int modes_total,
                        int cutoff, std::span<const int> modes, std::span<const Complex> coef) {
  const std::size_t side = static_cast<std::size_t>(cutoff) + 1;
  std::vector<double> root(side);
  for (std::size_t m = 0; m < side; ++m) root[m] = std::sqrt(static_cast<double>(m));

  for (std::size_t j = 0; j < modes.size(); ++j) {
    std::size_t stride = 1;
    for (int q = modes[j] + 1; q < modes_total; ++q) stride *= side;
    const std::size_t block = stride * side;
    const std::size_t blocks = in.size() / block;
    for (std::size_t b = 0; b < blocks; ++b) {
      const std::size_t base = b * block;
      for (std::size_t m = 1; m < side; ++m) {
        const Complex f = coef[j] * root[m];
        const Complex* src = in.data() + base + m * stride;
        Complex* dst = out.data() + base + (m - 1) * stride;
        for (std::size_t r = 0; r < stride; ++r) dst[r] += f * src[r];
      }
    }
  }
}

}  // namespace

double g2_fock_oracle(const MultiPairState& state, const ModeLattice& lattice, double tau1,
                      double tau2) {
  const int pairs = state.pair_count();
  if (pairs > kMaxOraclePairs)
    throw RangeError("fock oracle: at most " + std::to_string(kMaxOraclePairs) + " pairs");
  if (state.cutoff() > kMaxOracleCutoff)
    throw RangeError("fock oracle: cutoff above " + std::to_string(kMaxOracleCutoff));
  if (lattice.n_modes() != pairs)
    throw InvalidArgument("fock oracle: lattice n_modes must equal the state's pair count");
  if (lattice.delta_nu() != 0.0)
    throw InvalidArgument("fock oracle: single-frequency modes required (delta_nu = 0)");

  const double t1 = lattice.nu_b() * tau1;
  const double t2 = lattice.nu_b() * tau2;
  std::vector<int> signal_modes, idler_modes;
  std::vector<Complex> signal_coef, idler_coef;
  for (int k = 0; k < pairs; ++k) {
    const double kd = static_cast<double>(k);
    signal_modes.push_back(2 * k);
    signal_coef.push_back(detail::unit_phasor(detail::reduced_product(kd, t1)));
    idler_modes.push_back(2 * k + 1);
    idler_coef.push_back(detail::unit_phasor(-detail::reduced_product(kd, t2)));
  }

  const auto psi = state.amplitudes();
  std::vector<Complex> once(psi.size()), twice(psi.size());
  apply_annihilators(psi, once, 2 * pairs, state.cutoff(), signal_modes, signal_coef);
  apply_annihilators(once, twice, 2 * pairs, state.cutoff(), idler_modes, idler_coef);
  return squared_norm(twice);
}

}  // namespace qgfc
