#pragma once

#include <cmath>
#include <complex>

#include "melfun/errors.hpp"
#include "melfun/util.hpp"

namespace melfun {

namespace detail {

// Lanczos coefficients, g = 7, 9 terms (Godfrey). Relative accuracy is about
// 1e-13 over the right half plane in double precision.
inline constexpr double lanczos_g = 7.0;
inline constexpr double lanczos_coef[9] = {
  0.99999999999980993,
  676.5203681218851,
  -1259.1392167224028,
  771.32342877765313,
  -176.61502916214059,
  12.507343278686905,
  -0.13857109526572012,
  9.9843695780195716e-6,
  1.5056327351493116e-7,
};

// log(sin(pi z)) stable for large |Im z|; the imaginary part is only defined
// modulo 2*pi, which is irrelevant once the result is exponentiated or its
// real part is taken.
inline cdouble log_sin_pi(cdouble z)
{
  const cdouble w = pi * z;
  const double y = w.imag();
  if (std::abs(y) < 18.0)
    return std::log(std::sin(w));
  const cdouble i(0.0, 1.0);
  if (y > 0.0)
    return -i * w + std::log(1.0 - std::exp(2.0 * i * w)) +
           cdouble(-std::log(2.0), pi / 2.0);
  return i * w + std::log(1.0 - std::exp(-2.0 * i * w)) +
         cdouble(-std::log(2.0), -pi / 2.0);
}

} // namespace detail

//! Principal-branch log-gamma up to an additive multiple of 2*pi*i.
//! Lanczos approximation with reflection for Re(z) < 1/2.
inline cdouble log_gamma(cdouble z)
{
  if (z.imag() == 0.0 && z.real() <= 0.0 && z.real() == std::floor(z.real()))
    throw DomainError("log_gamma: pole at non-positive integer");

  if (z.real() < 0.5) {
    // Gamma(z) Gamma(1-z) = pi / sin(pi z)
    return std::log(pi) - detail::log_sin_pi(z) - log_gamma(1.0 - z);
  }

  const cdouble zm = z - 1.0;
  cdouble sum = detail::lanczos_coef[0];
  for (int j = 1; j < 9; ++j)
    sum += detail::lanczos_coef[j] / (zm + static_cast<double>(j));
  const cdouble t = zm + detail::lanczos_g + 0.5;
  return 0.5 * std::log(2.0 * pi) + (zm + 0.5) * std::log(t) - t +
         std::log(sum);
}

//! Gamma function for complex argument.
inline cdouble gamma(cdouble z)
{
  return std::exp(log_gamma(z));
}

//! log|Gamma(z)|, exact in the sense that the branch ambiguity drops out.
inline double log_abs_gamma(cdouble z)
{
  return log_gamma(z).real();
}

} // namespace melfun
