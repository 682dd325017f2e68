#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <variant>

#include "melfun/complex_gamma.hpp"
#include "melfun/decay.hpp"
#include "melfun/error_model.hpp"
#include "melfun/errors.hpp"
#include "melfun/util.hpp"

namespace melfun {

//! Decay envelope of the representing function Psi:
//!   smooth:       |Psi(t)| ~ (1+t^2)^(-p/2)
//!   super-smooth: |Psi(t)| ~ (1+t^2)^(-p/2) * exp(-mu*|t|^R)
struct PsiDecay
{
  enum class Kind
  {
    Smooth,
    SuperSmooth
  };

  Kind kind = Kind::Smooth;
  double p = 0.0;
  double mu = 0.0; //!< super-smooth only
  double R = 0.0;  //!< super-smooth only

  double envelope(double t) const
  {
    const double poly = std::pow(1.0 + t * t, -0.5 * p);
    if (kind == Kind::Smooth)
      return poly;
    return poly * std::exp(-mu * std::pow(std::abs(t), R));
  }
};

namespace detail {

inline void require_positive_point(double x0)
{
  if (!(x0 > 0.0))
    throw DomainError("functional: evaluation point x0 must be positive");
}

} // namespace detail

//! Point evaluation f(x0). Well-posedness additionally needs M_c[f]
//! integrable, which only the caller can know; any c is accepted.
struct DensityAt
{
  explicit DensityAt(double x0_)
    : x0(x0_)
  {
    detail::require_positive_point(x0);
  }
  double x0;
};

//! Distribution function F(x0); needs c < 1.
struct CdfAt
{
  explicit CdfAt(double x0_)
    : x0(x0_)
  {
    detail::require_positive_point(x0);
  }
  double x0;
};

//! Survival function S(x0) = 1 - F(x0); needs c > 1.
struct SurvivalAt
{
  explicit SurvivalAt(double x0_)
    : x0(x0_)
  {
    detail::require_positive_point(x0);
  }
  double x0;
};

//! Laplace transform L(x0) = E exp(-x0 X); needs c < 1.
struct LaplaceAt
{
  explicit LaplaceAt(double x0_)
    : x0(x0_)
  {
    detail::require_positive_point(x0);
  }
  double x0;
};

//! User-supplied Psi with a declared decay class (the class is never
//! inferred: the selection rule needs a certified envelope).
struct CustomPsi
{
  CustomPsi(std::function<cdouble(double c, double t)> psi_, PsiDecay decay_,
            Interval c_range_ = {})
    : psi(std::move(psi_))
    , decay(decay_)
    , c_range(c_range_)
  {
    // Hermitian-symmetry contract, spot-checked at representative points
    const double c_probe =
      c_range.contains(0.0) ? 0.0
                            : 0.5 * (std::max(c_range.lo, -10.0) +
                                     std::min(c_range.hi, 10.0));
    for (const double t : { 0.3, 1.7, 7.9, 23.0 }) {
      const cdouble asym = psi(c_probe, -t) - std::conj(psi(c_probe, t));
      if (std::abs(asym) > 1e-10)
        throw DomainError("custom Psi: conj(Psi(t)) != Psi(-t) at t=" +
                          std::to_string(t));
    }
  }

  std::function<cdouble(double, double)> psi;
  PsiDecay decay;
  Interval c_range;
};

using FunctionalSpec =
  std::variant<DensityAt, CdfAt, SurvivalAt, LaplaceAt, CustomPsi>;

inline std::string functional_name(const FunctionalSpec& spec)
{
  struct V
  {
    std::string operator()(const DensityAt& f) const
    {
      return "density at x0=" + std::to_string(f.x0);
    }
    std::string operator()(const CdfAt& f) const
    {
      return "cdf at x0=" + std::to_string(f.x0);
    }
    std::string operator()(const SurvivalAt& f) const
    {
      return "survival at x0=" + std::to_string(f.x0);
    }
    std::string operator()(const LaplaceAt& f) const
    {
      return "laplace at x0=" + std::to_string(f.x0);
    }
    std::string operator()(const CustomPsi&) const { return "custom"; }
  };
  return std::visit(V{}, spec);
}

inline Interval c_range(const FunctionalSpec& spec)
{
  const double inf = std::numeric_limits<double>::infinity();
  struct V
  {
    double inf;
    Interval operator()(const DensityAt&) const { return { -inf, inf }; }
    Interval operator()(const CdfAt&) const { return { -inf, 1.0 }; }
    Interval operator()(const SurvivalAt&) const { return { 1.0, inf }; }
    Interval operator()(const LaplaceAt&) const { return { -inf, 1.0 }; }
    Interval operator()(const CustomPsi& f) const { return f.c_range; }
  };
  return std::visit(V{ inf }, spec);
}

inline void require_admissible(const FunctionalSpec& spec, double c)
{
  const Interval iv = c_range(spec);
  if (!iv.contains(c))
    throw DomainError("development point c=" + std::to_string(c) +
                      " outside the interval (" + std::to_string(iv.lo) +
                      ", " + std::to_string(iv.hi) + ") required by the " +
                      functional_name(spec) + " functional");
}

//! The representing function Psi(t) of the linear functional
//!   theta(f) = (1/2pi) int Psi(-t) M_c[f](t) dt.
inline cdouble psi(const FunctionalSpec& spec, double c, double t)
{
  require_admissible(spec, c);
  struct V
  {
    double c, t;
    cdouble operator()(const DensityAt& f) const
    {
      return std::pow(f.x0, cdouble(-c, t));
    }
    cdouble operator()(const CdfAt& f) const
    {
      return std::pow(f.x0, cdouble(1.0 - c, t)) / cdouble(1.0 - c, t);
    }
    cdouble operator()(const SurvivalAt& f) const
    {
      return -std::pow(f.x0, cdouble(1.0 - c, t)) / cdouble(1.0 - c, t);
    }
    cdouble operator()(const LaplaceAt& f) const
    {
      return std::pow(f.x0, cdouble(c - 1.0, -t)) * gamma(cdouble(1.0 - c, t));
    }
    cdouble operator()(const CustomPsi& f) const { return f.psi(c, t); }
  };
  return std::visit(V{ c, t }, spec);
}

//! Decay classification of Psi. The laplace kind decays super-smoothly with
//! a c-dependent polynomial exponent, so the development point is part of
//! the classification.
inline PsiDecay psi_decay(const FunctionalSpec& spec, double c)
{
  struct V
  {
    double c;
    PsiDecay operator()(const DensityAt&) const
    {
      return { PsiDecay::Kind::Smooth, 0.0, 0.0, 0.0 };
    }
    PsiDecay operator()(const CdfAt&) const
    {
      return { PsiDecay::Kind::Smooth, 1.0, 0.0, 0.0 };
    }
    PsiDecay operator()(const SurvivalAt&) const
    {
      return { PsiDecay::Kind::Smooth, 1.0, 0.0, 0.0 };
    }
    PsiDecay operator()(const LaplaceAt&) const
    {
      return { PsiDecay::Kind::SuperSmooth, 1.0 - 2.0 * c, pi / 2.0, 1.0 };
    }
    PsiDecay operator()(const CustomPsi& f) const { return f.decay; }
  };
  return std::visit(V{ c }, spec);
}

enum class Regime
{
  Parametric,
  Nonparametric
};

inline const char* to_string(Regime r)
{
  return r == Regime::Parametric ? "parametric" : "nonparametric";
}

//! Does the variance proxy Delta stay bounded as the cut-off grows?
//! Bounded (parametric) exactly when Psi decays fast enough relative to the
//! error transform; then a large fixed cut-off already gives a 1/n rate.
inline Regime classify_regime(const PsiDecay& psi_d, const DecayClass& g_d)
{
  const bool psi_ss = psi_d.kind == PsiDecay::Kind::SuperSmooth;
  const bool g_ss = g_d.kind == DecayClass::Kind::SuperSmooth;
  const double margin = 2.0 * psi_d.p - 2.0 * g_d.gamma;

  if (!psi_ss && !g_ss)
    return margin > 1.0 ? Regime::Parametric : Regime::Nonparametric;
  if (psi_ss && !g_ss)
    return Regime::Parametric;
  if (!psi_ss && g_ss)
    return Regime::Nonparametric;
  // both super-smooth: compare the exponential orders first
  if (psi_d.R > g_d.rho)
    return Regime::Parametric;
  if (psi_d.R < g_d.rho)
    return Regime::Nonparametric;
  if (psi_d.mu > g_d.lambda)
    return Regime::Parametric;
  if (psi_d.mu < g_d.lambda)
    return Regime::Nonparametric;
  return margin > 1.0 ? Regime::Parametric : Regime::Nonparametric;
}

//! Ground-truth value of the functional for a catalog target distribution.
//! Throws DomainError when no closed form is available; callers may fall
//! back to true_value_quadrature.
inline double true_value(const ErrorModel& target, const FunctionalSpec& spec)
{
  struct V
  {
    const ErrorModel& target;
    double operator()(const DensityAt& f) const
    {
      return density(target, f.x0);
    }
    double operator()(const CdfAt& f) const { return cdf(target, f.x0); }
    double operator()(const SurvivalAt& f) const
    {
      return 1.0 - cdf(target, f.x0);
    }
    double operator()(const LaplaceAt& f) const
    {
      if (const auto v = laplace_closed(target, f.x0))
        return *v;
      throw DomainError("true_value: no closed-form laplace transform for " +
                        model_name(target));
    }
    double operator()(const CustomPsi&) const
    {
      throw DomainError("true_value: custom functionals carry no oracle");
    }
  };
  return std::visit(V{ target }, spec);
}

//! Quadrature fallback for the laplace transform of a catalog target.
inline double true_value_quadrature(const ErrorModel& target,
                                    const LaplaceAt& f)
{
  const DensityFn fd = density_fn(target);
  const auto integrand = [&](double u) {
    const double x = std::exp(u);
    return x * std::exp(-f.x0 * x) * fd(x);
  };
  // exp(-x0 x) times an integrable density: windows identical to a mass check
  double total = 0.0;
  for (int w = -40; w < 40; ++w) {
    auto part = quad::adaptive_simpson(integrand, 2.0 * w, 2.0 * (w + 1), 1e-12);
    total += part.value;
  }
  return total;
}

} // namespace melfun
