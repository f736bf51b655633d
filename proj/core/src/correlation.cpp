#include "qgfc/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/special_functions/sin_pi.hpp>
#include <boost/math/special_functions/cos_pi.hpp>
#include <boost/math/tools/minima.hpp>

#include "phase.hpp"
#include "qgfc/error.hpp"
#include "qgfc/parallel.hpp"
#include "qgfc/quantumstate.hpp"
#include "qgfc/seed.hpp"

namespace qgfc {
namespace {

constexpr double kPi = std::numbers::pi;
// Below this |sin(x/2)| the kernel switches to its series about x = 2*pi*k.
constexpr double kSingularSwitch = 1e-8;

bool is_odd(double integral) { return std::fmod(std::abs(integral), 2.0) == 1.0; }

void require_positive_modes(std::int64_t n) {
  if (n < 1) throw InvalidArgument("dirichlet kernel: N must be >= 1");
}

// log of sin^2(N y/2) / (N^2 sin^2(y/2)) through fourth order in y.
double log_kernel_series(double n, double y) {
  const double y2 = y * y;
  return -(n * n - 1.0) * y2 / 12.0 - (n * n * n * n - 1.0) * y2 * y2 / 1440.0;
}

}  // namespace

double dirichlet_kernel_turns(std::int64_t n_modes, double turns) {
  require_positive_modes(n_modes);
  const double n = static_cast<double>(n_modes);
  const double r = turns - std::nearbyint(turns);
  const double den = std::sin(kPi * r);
  if (std::abs(den) < kSingularSwitch && n * std::abs(r) < 1e-3)
    return n * n * std::exp(log_kernel_series(n, 2.0 * kPi * r));
  const double num = std::sin(kPi * detail::reduced_product(n, r));
  const double q = num / den;
  return q * q;
}

double dirichlet_kernel(std::int64_t n_modes, double x_rad) {
  return dirichlet_kernel_turns(n_modes, x_rad / (2.0 * kPi));
}

double dirichlet_amplitude_turns(std::int64_t n_modes, double turns) {
  require_positive_modes(n_modes);
  const double n = static_cast<double>(n_modes);
  const double k = std::nearbyint(turns);
  const double r = turns - k;
  // sin(pi N t) = (-1)^(N k) sin(pi N r),  sin(pi t) = (-1)^k sin(pi r)
  const bool flip_k = is_odd(k) && !is_odd(n);  // (-1)^(k(N-1))
  const double den = std::sin(kPi * r);
  double value;
  if (std::abs(den) < kSingularSwitch && n * std::abs(r) < 1e-3) {
    value = std::exp(0.5 * log_kernel_series(n, 2.0 * kPi * r));
  } else {
    const double p = n * r;
    const bool flip_m = is_odd(std::nearbyint(p));
    const double num = std::sin(kPi * detail::reduced_product(n, r));
    value = (flip_m ? -num : num) / (n * den);
  }
  return flip_k ? -value : value;
}

double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

std::complex<double> psi_direct(const ModeLattice& lattice, std::span<const double> mode_weights,
                                double tau1, double tau2) {
  if (lattice.delta_nu() != 0.0)
    throw InvalidArgument("psi_direct: requires single-frequency modes (delta_nu = 0)");
  if (mode_weights.size() != static_cast<std::size_t>(lattice.n_modes()))
    throw InvalidArgument("psi_direct: need one weight per mode");
  const double turns = lattice.nu_b() * (tau1 - tau2);
  detail::CompensatedSum sum;
  for (std::int64_t n = 0; n < lattice.n_modes(); ++n)
    sum.add(mode_weights[static_cast<std::size_t>(n)] *
            detail::unit_phasor(detail::reduced_product(static_cast<double>(n), turns)));
  const auto carrier =
      detail::unit_phasor(detail::reduced_product(0.5 * lattice.nu_p(), tau1 + tau2));
  return carrier * sum.value();
}

std::complex<double> psi_direct(const ModeLattice& lattice, double tau1, double tau2) {
  const std::vector<double> flat(static_cast<std::size_t>(lattice.n_modes()), 1.0);
  return psi_direct(lattice, flat, tau1, tau2);
}

double g2_closed(const ModeLattice& lattice, double tau) {
  const double n = static_cast<double>(lattice.n_modes());
  const double comb = dirichlet_kernel_turns(lattice.n_modes(), lattice.nu_b() * tau) / (n * n);
  if (lattice.delta_nu() == 0.0) return comb;
  const double env = sinc(kPi * lattice.delta_nu() * tau);
  return env * env * comb;
}

// ---------------------------------------------------------------------------
// Monte-Carlo envelope

namespace {

// Extra creation-window reach beyond each detection time, in units of 1/delta_nu.
constexpr double kCreationMarginLinewidths = 50.0;
constexpr std::int64_t kMcChunk = 1024;

// Pair overlap in linewidth units: x = delta_nu t0, a = delta_nu tau / 2.
double packet_overlap(double a, double x) { return sinc(kPi * (a - x)) * sinc(kPi * (-a - x)); }

// Integral of packet_overlap(a, .) over |x| > h, for 0 <= a < h.  Over the
// whole line it equals sinc(2 pi a).
double overlap_tail(double a, double h) {
  const double k = 1.0 / (2.0 * kPi * kPi);
  const double smooth =
      a == 0.0 ? 1.0 / h : std::log1p(2.0 * a / (h - a)) / (2.0 * a);  // int_h^inf dx/(x^2-a^2)
  thread_local boost::math::quadrature::ooura_fourier_cos<double> fcos;
  thread_local boost::math::quadrature::ooura_fourier_sin<double> fsin;
  auto g = [&](double t) { return 1.0 / ((h + t) * (h + t) - a * a); };
  const double oscill = boost::math::cos_pi(2.0 * h) * fcos.integrate(g, 2.0 * kPi).first -
                        boost::math::sin_pi(2.0 * h) * fsin.integrate(g, 2.0 * kPi).first;
  return 2.0 * k * (boost::math::cos_pi(2.0 * a) * smooth - oscill);
}

}  // namespace

McEstimate g2_mc_envelope(const ModeLattice& lattice, double tau, std::int64_t n_realizations,
                          std::uint64_t seed, unsigned threads) {
  if (!(lattice.delta_nu() > 0.0))
    throw InvalidArgument("g2_mc_envelope: requires a finite linewidth (delta_nu > 0)");
  if (n_realizations < 1) throw InvalidArgument("g2_mc_envelope: n_realizations must be >= 1");

  const double dnu = lattice.delta_nu();
  const double a = 0.5 * std::abs(dnu * tau);
  const double half_window = kCreationMarginLinewidths + a;
  const double tail = overlap_tail(a, half_window);
  const auto n_modes = static_cast<std::size_t>(lattice.n_modes());
  const double turns = lattice.nu_b() * tau;

  std::vector<std::complex<double>> phasors(n_modes);
  for (std::size_t n = 0; n < n_modes; ++n)
    phasors[n] = detail::unit_phasor(detail::reduced_product(static_cast<double>(n), turns));

  const auto total = static_cast<std::size_t>(n_realizations);
  const std::size_t chunks = (total + kMcChunk - 1) / kMcChunk;
  std::vector<std::complex<double>> amplitude(total);

  parallel_for(chunks, threads, [&](std::size_t c) {
    Rng rng = make_rng(seed, "mc_envelope", c);
    std::uniform_real_distribution<double> creation(-half_window, half_window);
    const std::size_t begin = c * kMcChunk;
    const std::size_t end = std::min(total, begin + kMcChunk);
    for (std::size_t r = begin; r < end; ++r) {
      detail::CompensatedSum acc;
      for (std::size_t n = 0; n < n_modes; ++n) {
        const double overlap = 2.0 * half_window * packet_overlap(a, creation(rng)) + tail;
        acc.add(overlap * phasors[n]);
      }
      amplitude[r] = acc.value() / static_cast<double>(n_modes);
    }
  });

  detail::CompensatedSum sum;
  for (const auto& a : amplitude) sum.add(a);
  const auto rd = static_cast<double>(total);
  const std::complex<double> mean = sum.value() / rd;
  if (total == 1) return {std::norm(mean), std::numeric_limits<double>::infinity()};

  double spread = 0.0;  // sum |A - mean|^2
  for (const auto& a : amplitude) spread += std::norm(a - mean);
  const double var_a = spread / (rd - 1.0);

  const double mag = std::abs(mean);
  double var_proj = 0.0;
  if (mag > 0.0) {
    const std::complex<double> dir = std::conj(mean) / mag;
    double m1 = 0.0;
    for (const auto& a : amplitude) m1 += (dir * a).real();
    m1 /= rd;
    for (const auto& a : amplitude) {
      const double d = (dir * a).real() - m1;
      var_proj += d * d;
    }
    var_proj /= (rd - 1.0);
  }
  const double estimate = mag * mag - var_a / rd;
  const double err2 = 4.0 * mag * mag * var_proj / rd + (var_a / rd) * (var_a / rd);
  return {estimate, std::sqrt(err2)};
}

// ---------------------------------------------------------------------------
// Comb descriptors

std::vector<double> comb_peak_positions(const ModeLattice& lattice, const DetectorGeometry& geom,
                                        std::int64_t n_first, std::int64_t n_last) {
  std::vector<double> out;
  if (n_last < n_first) return out;
  out.reserve(static_cast<std::size_t>(n_last - n_first + 1));
  const double offset = geom.retarded_offset();
  for (std::int64_t n = n_first; n <= n_last; ++n)
    out.push_back(static_cast<double>(n) / lattice.nu_b() + offset);
  return out;
}

double comb_peak_width(const ModeLattice& lattice) {
  if (lattice.n_modes() < 2) throw InvalidArgument("comb_peak_width: a comb needs N >= 2");
  return 1.0 / (lattice.nu_b() * static_cast<double>(lattice.n_modes()));
}

EnvelopeWidths envelope_widths(const ModeLattice& lattice) {
  if (!(lattice.delta_nu() > 0.0))
    throw InvalidArgument("envelope_widths: requires delta_nu > 0");
  // sinc^2(x) = 1/2 has its positive root in (1, 2).
  double lo = 1.0, hi = 2.0;
  for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double s = sinc(mid);
    (s * s > 0.5 ? lo : hi) = mid;
  }
  const double x_half = 0.5 * (lo + hi);
  return {1.0 / lattice.delta_nu(), 2.0 * x_half / (kPi * lattice.delta_nu())};
}

double locate_peak(const ModeLattice& lattice, double tau_guess) {
  const double half = lattice.n_modes() >= 2 ? 0.5 * comb_peak_width(lattice)
                                             : 0.25 / std::max(lattice.delta_nu(), lattice.nu_b());
  // Search in units of `half`: the minimizer has an absolute tolerance floor.
  auto neg = [&](double u) { return -g2_closed(lattice, tau_guess + u * half); };
  std::uintmax_t iters = 500;
  const auto [u, fu] = boost::math::tools::brent_find_minima(
      neg, -1.0, 1.0, std::numeric_limits<double>::digits, iters);
  (void)fu;
  return tau_guess + u * half;
}

double first_zero_after(const ModeLattice& lattice, double tau_peak) {
  const double w = comb_peak_width(lattice);
  auto amp = [&](double tau) {
    return sinc(kPi * lattice.delta_nu() * tau) *
           dirichlet_amplitude_turns(lattice.n_modes(), lattice.nu_b() * tau);
  };
  double lo = tau_peak + 0.5 * w;
  double hi = tau_peak + 1.5 * w;
  double flo = amp(lo);
  if ((flo > 0.0) == (amp(hi) > 0.0))
    throw InvalidArgument("first_zero_after: no sign change next to the given peak");
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = amp(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Curves

std::string_view to_string(CurveMethod m) noexcept {
  switch (m) {
    case CurveMethod::direct: return "direct";
    case CurveMethod::closed: return "closed";
    case CurveMethod::mc_envelope: return "mc_envelope";
    case CurveMethod::fock_oracle: return "fock_oracle";
  }
  return "unknown";
}

std::string_view to_string(Normalization n) noexcept {
  return n == Normalization::peak ? "peak-normalized" : "raw";
}

CurveMethod parse_curve_method(std::string_view name) {
  if (name == "direct") return CurveMethod::direct;
  if (name == "closed") return CurveMethod::closed;
  if (name == "mc" || name == "mc_envelope") return CurveMethod::mc_envelope;
  if (name == "fock" || name == "fock_oracle") return CurveMethod::fock_oracle;
  throw InvalidArgument("unknown curve method '" + std::string(name) + "'");
}

CorrelationCurve curve(const ModeLattice& lattice, const DetectorGeometry& geom, double tau_min,
                       double tau_max, std::int64_t n_points, CurveMethod method,
                       const CurveOptions& options) {
  validate(geom);
  if (!(tau_min < tau_max)) throw InvalidArgument("curve: tau_min must be < tau_max");
  if (n_points < 2) throw InvalidArgument("curve: n_points must be >= 2");

  CorrelationCurve out{{}, {}, {}, Normalization::peak, method, lattice, geom, std::nullopt, std::nullopt};
  const auto count = static_cast<std::size_t>(n_points);
  out.tau.resize(count);
  out.values.resize(count);
  const double step = (tau_max - tau_min) / static_cast<double>(n_points - 1);
  for (std::size_t i = 0; i < count; ++i) out.tau[i] = tau_min + static_cast<double>(i) * step;
  out.tau.back() = tau_max;
  const double offset = geom.retarded_offset();

  std::function<double(double)> eval;
  std::optional<MultiPairState> oracle_state;
  double oracle_peak = 1.0;
  switch (method) {
    case CurveMethod::closed:
      eval = [&](double t) { return g2_closed(lattice, t); };
      break;
    case CurveMethod::direct: {
      if (lattice.delta_nu() != 0.0)
        throw InvalidArgument("curve: method 'direct' requires delta_nu = 0");
      const double n2 = static_cast<double>(lattice.n_modes()) * static_cast<double>(lattice.n_modes());
      eval = [&, n2](double t) { return std::norm(psi_direct(lattice, t, 0.0)) / n2; };
      break;
    }
    case CurveMethod::mc_envelope:
      out.std_errors.resize(count);
      out.mc_realizations = options.mc_realizations;
      out.seed = options.seed;
      break;
    case CurveMethod::fock_oracle: {
      if (lattice.n_modes() > kMaxOraclePairs)
        throw RangeError("curve: fock oracle supports at most " + std::to_string(kMaxOraclePairs) +
                         " mode pairs");
      const std::vector<Complex> equal(static_cast<std::size_t>(lattice.n_modes()), Complex{1.0});
      oracle_state = MultiPairState::entangled_pairs(equal, options.oracle_cutoff);
      oracle_peak = g2_fock_oracle(*oracle_state, lattice, 0.0, 0.0);
      eval = [&](double t) { return g2_fock_oracle(*oracle_state, lattice, t, 0.0) / oracle_peak; };
      break;
    }
  }

  const std::size_t kBlock = method == CurveMethod::mc_envelope ? 1 : 4096;
  const std::size_t blocks = (count + kBlock - 1) / kBlock;
  parallel_for(blocks, options.threads, [&](std::size_t b) {
    const std::size_t end = std::min(count, (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) {
      const double t = out.tau[i] - offset;
      if (method == CurveMethod::mc_envelope) {
        const McEstimate e = g2_mc_envelope(lattice, t, options.mc_realizations, options.seed, 1);
        // The unbiased estimator can dip below zero in the valleys.
        out.values[i] = std::max(0.0, e.mean);
        out.std_errors[i] = e.std_error;
      } else {
        out.values[i] = eval(t);
      }
    }
  });
  return out;
}

}  // namespace qgfc
