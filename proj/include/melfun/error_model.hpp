#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <variant>

#include "melfun/complex_gamma.hpp"
#include "melfun/decay.hpp"
#include "melfun/errors.hpp"
#include "melfun/mellin.hpp"
#include "melfun/util.hpp"

namespace melfun {

//! g(x) = b (1-x)^{b-1} on (0,1); b = 1 is the uniform error of
//! multiplicative censoring.
struct BetaModel
{
  explicit BetaModel(int b_)
    : b(b_)
  {
    if (b < 1)
      throw DomainError("beta error: b must be a positive integer");
  }
  int b;
};

//! g(x) = lambda^a e^{lambda*mu} / Gamma(a) * x^{-lambda-1} (log x - mu)^{a-1}
//! on (e^mu, inf). a = 1 is a Pareto model, mu = 0 a log-gamma model.
struct ScaledLogGammaModel
{
  ScaledLogGammaModel(double mu_, double a_, double lambda_)
    : mu(mu_)
    , a(a_)
    , lambda(lambda_)
  {
    if (!(a > 0.0) || !(lambda > 0.0))
      throw DomainError("scaled log-gamma error: a and lambda must be positive");
  }
  double mu, a, lambda;
};

//! g(x) = x^{d-1} e^{-x} / Gamma(d) on (0, inf).
struct GammaModel
{
  explicit GammaModel(double d_)
    : d(d_)
  {
    if (!(d > 0.0))
      throw DomainError("gamma error: d must be positive");
  }
  double d;
};

//! g(x) = m x^{m-1} e^{-x^m} on (0, inf).
struct WeibullModel
{
  explicit WeibullModel(double m_)
    : m(m_)
  {
    if (!(m > 0.0))
      throw DomainError("weibull error: m must be positive");
  }
  double m;
};

//! g(x) = (sqrt(2 pi) lambda x)^{-1} exp(-(log x - mu)^2 / (2 lambda^2)).
struct LognormalModel
{
  LognormalModel(double mu_, double lambda_)
    : mu(mu_)
    , lambda(lambda_)
  {
    if (!(lambda > 0.0))
      throw DomainError("lognormal error: lambda must be positive");
  }
  double mu, lambda;
};

using ErrorModel = std::variant<BetaModel, ScaledLogGammaModel, GammaModel,
                                WeibullModel, LognormalModel>;

inline std::string model_name(const ErrorModel& m)
{
  struct V
  {
    std::string operator()(const BetaModel& g) const
    {
      return "beta(b=" + std::to_string(g.b) + ")";
    }
    std::string operator()(const ScaledLogGammaModel& g) const
    {
      return "sloggamma(mu=" + std::to_string(g.mu) +
             ", a=" + std::to_string(g.a) +
             ", lambda=" + std::to_string(g.lambda) + ")";
    }
    std::string operator()(const GammaModel& g) const
    {
      return "gamma(d=" + std::to_string(g.d) + ")";
    }
    std::string operator()(const WeibullModel& g) const
    {
      return "weibull(m=" + std::to_string(g.m) + ")";
    }
    std::string operator()(const LognormalModel& g) const
    {
      return "lognormal(mu=" + std::to_string(g.mu) +
             ", lambda=" + std::to_string(g.lambda) + ")";
    }
  };
  return std::visit(V{}, m);
}

//! Admissible development points c for which M_c[g] is well defined.
inline Interval admissible_c(const ErrorModel& m)
{
  const double inf = std::numeric_limits<double>::infinity();
  struct V
  {
    double inf;
    Interval operator()(const BetaModel&) const { return { 0.0, inf }; }
    Interval operator()(const ScaledLogGammaModel& g) const
    {
      return { -inf, g.lambda + 1.0 };
    }
    Interval operator()(const GammaModel& g) const
    {
      return { 1.0 - g.d, inf };
    }
    Interval operator()(const WeibullModel& g) const
    {
      return { 1.0 - g.m, inf };
    }
    Interval operator()(const LognormalModel&) const { return { -inf, inf }; }
  };
  return std::visit(V{ inf }, m);
}

inline void require_admissible(const ErrorModel& m, double c)
{
  const Interval iv = admissible_c(m);
  if (!iv.contains(c))
    throw DomainError("development point c=" + std::to_string(c) +
                      " outside the admissible interval (" +
                      std::to_string(iv.lo) + ", " + std::to_string(iv.hi) +
                      ") of " + model_name(m));
}

//! Closed-form Mellin transform M_c[g](t); nonzero for every real t.
inline cdouble analytic_mellin(const ErrorModel& m, double c, double t)
{
  require_admissible(m, c);
  const cdouble z(c - 1.0, t);
  struct V
  {
    cdouble z;
    double c, t;
    cdouble operator()(const BetaModel& g) const
    {
      cdouble prod = 1.0;
      for (int j = 1; j <= g.b; ++j)
        prod *= static_cast<double>(j) / (z + static_cast<double>(j));
      return prod;
    }
    cdouble operator()(const ScaledLogGammaModel& g) const
    {
      // normalized so that M_1[g](0) = 1: includes the lambda^a factor
      return std::exp(g.mu * z) * std::pow(1.0 - z / g.lambda, -g.a);
    }
    cdouble operator()(const GammaModel& g) const
    {
      return std::exp(log_gamma(z + g.d) - log_gamma(cdouble(g.d, 0.0)));
    }
    cdouble operator()(const WeibullModel& g) const
    {
      // (z/m) Gamma(z/m) written as Gamma(1 + z/m) to avoid the 0 * pole
      // form at z = 0
      return gamma(1.0 + z / g.m);
    }
    cdouble operator()(const LognormalModel& g) const
    {
      return std::exp(g.mu * z + 0.5 * g.lambda * g.lambda * z * z);
    }
  };
  return std::visit(V{ z, c, t }, m);
}

inline std::pair<double, double> support(const ErrorModel& m)
{
  const double inf = std::numeric_limits<double>::infinity();
  struct V
  {
    double inf;
    std::pair<double, double> operator()(const BetaModel&) const
    {
      return { 0.0, 1.0 };
    }
    std::pair<double, double> operator()(const ScaledLogGammaModel& g) const
    {
      return { std::exp(g.mu), inf };
    }
    std::pair<double, double> operator()(const GammaModel&) const
    {
      return { 0.0, inf };
    }
    std::pair<double, double> operator()(const WeibullModel&) const
    {
      return { 0.0, inf };
    }
    std::pair<double, double> operator()(const LognormalModel&) const
    {
      return { 0.0, inf };
    }
  };
  return std::visit(V{ inf }, m);
}

inline double density(const ErrorModel& m, double x)
{
  if (!(x > 0.0))
    return 0.0;
  struct V
  {
    double x;
    double operator()(const BetaModel& g) const
    {
      if (x > 1.0)
        return 0.0;
      // at x = 1 this evaluates the one-sided limit (1 for b = 1, else 0)
      return g.b * std::pow(1.0 - x, g.b - 1);
    }
    double operator()(const ScaledLogGammaModel& g) const
    {
      const double w = std::log(x) - g.mu;
      if (w < 0.0)
        return 0.0;
      if (w == 0.0) {
        if (g.a == 1.0)
          return g.lambda * std::exp(-g.mu); // one-sided limit at the edge
        return g.a > 1.0 ? 0.0 : std::numeric_limits<double>::infinity();
      }
      return std::exp(g.a * std::log(g.lambda) + g.lambda * g.mu -
                      std::lgamma(g.a) - (g.lambda + 1.0) * std::log(x) +
                      (g.a - 1.0) * std::log(w));
    }
    double operator()(const GammaModel& g) const
    {
      return std::exp((g.d - 1.0) * std::log(x) - x - std::lgamma(g.d));
    }
    double operator()(const WeibullModel& g) const
    {
      const double xm = std::pow(x, g.m);
      return g.m * std::pow(x, g.m - 1.0) * std::exp(-xm);
    }
    double operator()(const LognormalModel& g) const
    {
      const double z = (std::log(x) - g.mu) / g.lambda;
      return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * pi) * g.lambda * x);
    }
  };
  return std::visit(V{ x }, m);
}

inline DensityFn density_fn(const ErrorModel& m)
{
  const auto [lo, hi] = support(m);
  return DensityFn([m](double x) { return density(m, x); }, lo, hi);
}

inline bool moment_exists(const ErrorModel& m, double r)
{
  struct V
  {
    double r;
    bool operator()(const BetaModel&) const { return r > -1.0; }
    bool operator()(const ScaledLogGammaModel& g) const
    {
      return r < g.lambda;
    }
    bool operator()(const GammaModel& g) const { return r > -g.d; }
    bool operator()(const WeibullModel& g) const { return r > -g.m; }
    bool operator()(const LognormalModel&) const { return true; }
  };
  return std::visit(V{ r }, m);
}

//! E(U^r) in closed form.
inline double error_moment(const ErrorModel& m, double r)
{
  if (!moment_exists(m, r))
    throw DomainError("moment E(U^" + std::to_string(r) + ") diverges for " +
                      model_name(m));
  struct V
  {
    double r;
    double operator()(const BetaModel& g) const
    {
      // b * B(r+1, b)
      return std::exp(std::log(static_cast<double>(g.b)) + std::lgamma(r + 1.0) +
                      std::lgamma(static_cast<double>(g.b)) -
                      std::lgamma(r + 1.0 + g.b));
    }
    double operator()(const ScaledLogGammaModel& g) const
    {
      return std::exp(g.mu * r) * std::pow(1.0 - r / g.lambda, -g.a);
    }
    double operator()(const GammaModel& g) const
    {
      return std::exp(std::lgamma(g.d + r) - std::lgamma(g.d));
    }
    double operator()(const WeibullModel& g) const
    {
      return std::tgamma(1.0 + r / g.m);
    }
    double operator()(const LognormalModel& g) const
    {
      return std::exp(g.mu * r + 0.5 * g.lambda * g.lambda * r * r);
    }
  };
  return std::visit(V{ r }, m);
}

//! Essential supremum of x -> x^{2c-1} g(x); +inf is returned as an explicit
//! flag rather than an error so callers can detect assumption violations.
inline double weighted_sup_norm(const ErrorModel& m, double c)
{
  require_admissible(m, c);
  const double inf = std::numeric_limits<double>::infinity();
  const double a = 2.0 * c - 1.0; // weight exponent
  struct V
  {
    double a, inf;
    double operator()(const BetaModel& g) const
    {
      const double b = static_cast<double>(g.b);
      if (a < 0.0)
        return inf;
      if (a == 0.0)
        return b;
      if (g.b == 1)
        return 1.0; // sup of x^a on (0,1)
      const double xs = a / (a + b - 1.0);
      return b * std::pow(xs, a) * std::pow(1.0 - xs, b - 1.0);
    }
    double operator()(const ScaledLogGammaModel& g) const
    {
      // in w = log x - mu the weighted density is lead * exp(beta w) w^{a-1}
      const double beta = a - 1.0 - g.lambda; // = 2c - 2 - lambda
      if (beta > 0.0)
        return inf;
      if (g.a < 1.0)
        return inf; // w^{a-1} blows up at the left endpoint
      const double lead = std::exp(g.a * std::log(g.lambda) -
                                   std::lgamma(g.a) + (a - 1.0) * g.mu);
      if (beta == 0.0)
        return g.a == 1.0 ? lead : inf;
      if (g.a == 1.0)
        return lead; // decreasing in w, sup at w -> 0
      const double ws = (g.a - 1.0) / (-beta);
      return lead * std::exp(beta * ws) * std::pow(ws, g.a - 1.0);
    }
    double operator()(const GammaModel& g) const
    {
      const double q = a + g.d - 1.0; // x^q e^{-x} / Gamma(d)
      if (q < 0.0)
        return inf;
      if (q == 0.0)
        return 1.0 / std::tgamma(g.d);
      return std::exp(q * std::log(q) - q - std::lgamma(g.d));
    }
    double operator()(const WeibullModel& g) const
    {
      const double q = a + g.m - 1.0; // m x^q e^{-x^m}
      if (q < 0.0)
        return inf;
      if (q == 0.0)
        return g.m;
      const double vs = q / g.m; // optimum of v^{q/m} e^{-v}
      return g.m * std::exp(vs * std::log(vs) - vs);
    }
    double operator()(const LognormalModel& g) const
    {
      // sup over z of exp((a-1) z) * normal kernel; finite for every c
      const double s = a - 1.0; // = 2c - 2
      return std::exp(s * g.mu + 0.5 * s * s * g.lambda * g.lambda) /
             (std::sqrt(2.0 * pi) * g.lambda);
    }
  };
  return std::visit(V{ a, inf }, m);
}

namespace detail {

// Fit the bracketing constants against the envelope on a dense t-grid. The
// slack covers the possible ratio variation between grid nodes, taken as the
// largest relative jump between adjacent samples.
inline void fit_decay_constants(const ErrorModel& m, double c, DecayClass& d,
                                double t_max = 200.0, int grid = 4001)
{
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  double jump = 0.0;
  double prev = -1.0;
  for (int i = 0; i < grid; ++i) {
    const double t = t_max * static_cast<double>(i) / (grid - 1);
    const double env = d.envelope(t);
    if (env < 1e-290)
      break; // past double range; the exponential bracket settles long before
    const double ratio = std::abs(analytic_mellin(m, c, t)) / env;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    if (prev > 0.0)
      jump = std::max(jump, std::abs(ratio - prev) / prev);
    prev = ratio;
  }
  d.c_low = lo * (1.0 - jump - 1e-9);
  d.c_up = hi * (1.0 + jump + 1e-9);
}

} // namespace detail

//! Decay classification of M_c[g] with fitted bracketing constants.
//! Polynomial exponents follow from the closed forms; the gamma and weibull
//! families decay exponentially with the modulus asymptotics of the gamma
//! function, |Gamma(x+iy)| ~ sqrt(2 pi) |y|^{x-1/2} e^{-pi |y| / 2}.
inline DecayClass decay_class(const ErrorModel& m, double c)
{
  require_admissible(m, c);
  struct V
  {
    double c;
    DecayClass operator()(const BetaModel& g) const
    {
      return DecayClass::smooth(static_cast<double>(g.b));
    }
    DecayClass operator()(const ScaledLogGammaModel& g) const
    {
      return DecayClass::smooth(g.a);
    }
    DecayClass operator()(const GammaModel& g) const
    {
      return DecayClass::super_smooth(-(c + g.d - 1.5), pi / 2.0, 1.0);
    }
    DecayClass operator()(const WeibullModel& g) const
    {
      // |M| = |z/m| |Gamma(z/m)| ~ (t/m)^{(c-1)/m + 1/2} e^{-pi t/(2m)}
      return DecayClass::super_smooth(-(2.0 * c - 2.0 + g.m) / (2.0 * g.m),
                                      pi / (2.0 * g.m), 1.0);
    }
    DecayClass operator()(const LognormalModel& g) const
    {
      return DecayClass::super_smooth(0.0, 0.5 * g.lambda * g.lambda, 2.0);
    }
  };
  DecayClass d = std::visit(V{ c }, m);
  detail::fit_decay_constants(m, c, d);
  return d;
}

namespace detail {

// Regularized lower incomplete gamma P(a, x): series for x < a+1, continued
// fraction otherwise.
inline double reg_lower_gamma(double a, double x)
{
  if (!(a > 0.0))
    throw DomainError("reg_lower_gamma: a must be positive");
  if (x <= 0.0)
    return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-16)
        break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  // Lentz continued fraction for Q(a, x)
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double C = 1.0 / tiny;
  double D = 1.0 / b;
  double h = D;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    D = an * D + b;
    if (std::abs(D) < tiny)
      D = tiny;
    C = b + an / C;
    if (std::abs(C) < tiny)
      C = tiny;
    D = 1.0 / D;
    const double del = D * C;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16)
      break;
  }
  const double q = std::exp(-x + a * std::log(x) - lg) * h;
  return 1.0 - q;
}

} // namespace detail

//! Cumulative distribution function of the catalog families; the gamma and
//! scaled log-gamma cases go through the regularized incomplete gamma.
inline double cdf(const ErrorModel& m, double x)
{
  if (x <= 0.0)
    return 0.0;
  struct V
  {
    double x;
    double operator()(const BetaModel& g) const
    {
      if (x >= 1.0)
        return 1.0;
      return 1.0 - std::pow(1.0 - x, g.b);
    }
    double operator()(const ScaledLogGammaModel& g) const
    {
      const double w = std::log(x) - g.mu;
      if (w <= 0.0)
        return 0.0;
      return detail::reg_lower_gamma(g.a, g.lambda * w);
    }
    double operator()(const GammaModel& g) const
    {
      return detail::reg_lower_gamma(g.d, x);
    }
    double operator()(const WeibullModel& g) const
    {
      return -std::expm1(-std::pow(x, g.m));
    }
    double operator()(const LognormalModel& g) const
    {
      const double z = (std::log(x) - g.mu) / (g.lambda * std::sqrt(2.0));
      return 0.5 * std::erfc(-z);
    }
  };
  return std::visit(V{ x }, m);
}

//! Laplace transform E(e^{-s U}) where a closed form exists.
inline std::optional<double> laplace_closed(const ErrorModel& m, double s)
{
  struct V
  {
    double s;
    std::optional<double> operator()(const BetaModel& g) const
    {
      if (s == 0.0)
        return 1.0;
      if (g.b == 1)
        return -std::expm1(-s) / s;
      if (g.b == 2)
        return 2.0 * (s - 1.0 + std::exp(-s)) / (s * s);
      return std::nullopt;
    }
    std::optional<double> operator()(const ScaledLogGammaModel&) const
    {
      return std::nullopt;
    }
    std::optional<double> operator()(const GammaModel& g) const
    {
      return std::pow(1.0 + s, -g.d);
    }
    std::optional<double> operator()(const WeibullModel&) const
    {
      return std::nullopt;
    }
    std::optional<double> operator()(const LognormalModel&) const
    {
      return std::nullopt;
    }
  };
  return std::visit(V{ s }, m);
}

//! E(U^r) existence plus value in one step, for scenario validation.
inline double moment(const ErrorModel& m, double r)
{
  return error_moment(m, r);
}

} // namespace melfun
