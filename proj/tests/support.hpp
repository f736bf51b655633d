#pragma once

// Shared helpers for the test binaries: seeded generators and small
// statistical oracles written independently of the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "qgfc/lattice.hpp"

namespace qgfc::test {

using Gen = std::mt19937_64;

inline double uniform(Gen& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline std::int64_t uniform_int(Gen& g, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(g);
}

inline ModeLattice lattice(std::int64_t n, double nu_b = 20e3, double delta_nu = 0.0) {
  ModeLattice::Params p;
  p.n_modes = n;
  p.nu_b_hz = nu_b;
  p.delta_nu_hz = delta_nu;
  return ModeLattice(p);
}

/// sin^2(pi N t)/sin^2(pi t) in long double with its own argument reduction.
inline long double naive_dirichlet_turns(std::int64_t n, long double t) {
  const long double pi = std::numbers::pi_v<long double>;
  t -= std::nearbyint(t);
  if (t == 0.0L) return static_cast<long double>(n) * n;
  long double nt = static_cast<long double>(n) * t;
  nt -= std::nearbyint(nt);
  const long double s = std::sin(pi * nt) / std::sin(pi * t);
  return s * s;
}

/// Upper-tail p-value of a Pearson chi-square test of equal expected counts.
inline double uniformity_p_value(const std::vector<double>& samples, double lo, double hi, int bins) {
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double x : samples) {
    auto b = static_cast<int>(std::floor((x - lo) / (hi - lo) * bins));
    b = std::clamp(b, 0, bins - 1);
    counts[static_cast<std::size_t>(b)] += 1.0;
  }
  const double expected = static_cast<double>(samples.size()) / bins;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  boost::math::chi_squared dist(bins - 1);
  return boost::math::cdf(boost::math::complement(dist, chi2));
}

/// One-sample Kolmogorov-Smirnov p-value (asymptotic series with the
/// Stephens small-sample correction).
template <typename Cdf>
double ks_p_value(std::vector<double> x, Cdf cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  const double sq = std::sqrt(n);
  const double lambda = (sq + 0.12 + 0.11 / sq) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    p += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace qgfc::test
