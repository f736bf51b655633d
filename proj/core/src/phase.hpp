#pragma once

#include <cmath>
#include <complex>
#include <numbers>

namespace qgfc::detail {

// a*b reduced modulo 1 into roughly [-0.5, 0.5].  The rounding error of the
// product is recovered with fma, so the result is accurate to ~1 ulp of the
// fractional part even when a*b is large.
inline double reduced_product(double a, double b) noexcept {
  const double p = a * b;
  const double e = std::fma(a, b, -p);
  return (p - std::nearbyint(p)) + e;
}

// exp(-2*pi*i*turns) for |turns| <= ~1.
inline std::complex<double> unit_phasor(double turns) noexcept {
  const double arg = -2.0 * std::numbers::pi * turns;
  return {std::cos(arg), std::sin(arg)};
}

// Neumaier-compensated complex accumulator.
class CompensatedSum {
 public:
  void add(std::complex<double> z) noexcept {
    add_part(re_, cre_, z.real());
    add_part(im_, cim_, z.imag());
  }
  std::complex<double> value() const noexcept { return {re_ + cre_, im_ + cim_}; }

 private:
  static void add_part(double& sum, double& comp, double x) noexcept {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double re_ = 0.0, cre_ = 0.0, im_ = 0.0, cim_ = 0.0;
};

}  // namespace qgfc::detail
