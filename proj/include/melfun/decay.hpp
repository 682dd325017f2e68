#pragma once

#include <cmath>
#include <limits>

#include "melfun/errors.hpp"
#include "melfun/quadrature.hpp"

namespace melfun {

//! Two-sided decay envelope of a Mellin transform:
//!   smooth:       |M(t)| ~ (1+t^2)^(-gamma/2)
//!   super-smooth: |M(t)| ~ (1+t^2)^(-gamma/2) * exp(-lambda*|t|^rho)
//! with bracketing constants c_low, c_up fitted on a t-grid.
struct DecayClass
{
  enum class Kind
  {
    Smooth,
    SuperSmooth
  };

  Kind kind = Kind::Smooth;
  double gamma = 1.0;
  double lambda = 0.0; //!< super-smooth only
  double rho = 0.0;    //!< super-smooth only
  double c_low = 1.0;
  double c_up = 1.0;

  double envelope(double t) const
  {
    const double poly = std::pow(1.0 + t * t, -0.5 * gamma);
    if (kind == Kind::Smooth)
      return poly;
    return poly * std::exp(-lambda * std::pow(std::abs(t), rho));
  }

  static DecayClass smooth(double gamma)
  {
    if (!(gamma > 0.0))
      throw DomainError("DecayClass: smooth class requires gamma > 0");
    DecayClass d;
    d.kind = Kind::Smooth;
    d.gamma = gamma;
    return d;
  }

  static DecayClass super_smooth(double gamma, double lambda, double rho)
  {
    if (!(lambda > 0.0) || !(rho > 0.0))
      throw DomainError(
        "DecayClass: super-smooth class requires lambda > 0 and rho > 0");
    DecayClass d;
    d.kind = Kind::SuperSmooth;
    d.gamma = gamma;
    d.lambda = lambda;
    d.rho = rho;
    return d;
  }
};

//! Is the weighted L2 integral  int (1+t^2)^s |M(t)|^2 dt  finite for a
//! transform bounded above and below by this envelope class?
inline bool weighted_l2_finite(const DecayClass& d, double s)
{
  if (d.kind == DecayClass::Kind::SuperSmooth)
    return true;
  return s < d.gamma - 0.5; // polynomial case: integrand ~ t^(2s-2gamma)
}

//! Certified bound on  int_T^inf (1+t^2)^s (c_up * envelope(t))^2 dt,
//! valid once the integrand is nonincreasing past T (T is advanced first).
//! Returns the bound together with the T actually used.
struct TailBound
{
  double bound;
  double t_start;
};

inline TailBound weighted_l2_tail_bound(const DecayClass& d, double s,
                                        double t_min)
{
  if (d.kind == DecayClass::Kind::Smooth) {
    // closed form: (1+t^2)^{s-gamma} <= t^{2(s-gamma)} for t >= 1, so the
    // tail is bounded by c_up^2 T^{2(s-gamma)+1} / (2(gamma-s)-1)
    if (!(s < d.gamma - 0.5))
      throw DomainError("weighted_l2_tail_bound: divergent polynomial tail");
    const double T = std::max(t_min, 1.0);
    const double q = 2.0 * (d.gamma - s) - 1.0;
    return { d.c_up * d.c_up * std::pow(T, -q) / q, T };
  }
  const auto integrand = [&](double t) {
    const double e = d.c_up * d.envelope(t);
    return std::pow(1.0 + t * t, s) * e * e;
  };
  // advance past any polynomial growth so the envelope is nonincreasing
  double T = std::max(t_min, 1.0);
  for (int i = 0; i < 400 && integrand(T + 1.0) > integrand(T); ++i)
    T += std::max(1.0, 0.25 * T);
  return { quad::decreasing_tail_bound(integrand, T), T };
}

} // namespace melfun
