#include <doctest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "melfun/error_model.hpp"

using namespace melfun;

TEST_SUITE("error_model")
{
  TEST_CASE("catalog transforms at t=0 integrate the density to one")
  {
    CHECK(std::abs(analytic_mellin(BetaModel(1), 1.0, 0.0) - cdouble(1.0)) <
          1e-14);
    CHECK(std::abs(analytic_mellin(GammaModel(1.0), 1.0, 0.0) - cdouble(1.0)) <
          1e-14);
    CHECK(std::abs(analytic_mellin(LognormalModel(0.0, 1.0), 1.0, 0.0) -
                   cdouble(1.0)) < 1e-14);
    CHECK(std::abs(analytic_mellin(WeibullModel(2.0), 1.0, 0.0) -
                   cdouble(1.0)) < 1e-14);
    CHECK(std::abs(analytic_mellin(ScaledLogGammaModel(0.3, 2.0, 3.0), 1.0,
                                   0.0) -
                   cdouble(1.0)) < 1e-14);
  }

  TEST_CASE("uniform error at c=1, t=1 equals the direct integral 1/(1+i)")
  {
    const cdouble got = analytic_mellin(BetaModel(1), 1.0, 1.0);
    CHECK(std::abs(got - cdouble(0.5, -0.5)) < 1e-14);
  }

  TEST_CASE("inadmissible development points are rejected by name")
  {
    CHECK_THROWS_AS((void)analytic_mellin(BetaModel(1), 0.0, 0.0),
                    DomainError);
    CHECK_THROWS_AS((void)analytic_mellin(BetaModel(2), -0.5, 1.0),
                    DomainError);
    CHECK_THROWS_AS((void)analytic_mellin(GammaModel(0.5), 0.4, 0.0),
                    DomainError);
    CHECK_THROWS_AS((void)analytic_mellin(ScaledLogGammaModel(0, 1, 2), 3.5,
                                          0.0),
                    DomainError);
    CHECK_NOTHROW((void)analytic_mellin(LognormalModel(0, 1), -25.0, 0.0));
  }

  TEST_CASE("invalid parameters are rejected at construction")
  {
    CHECK_THROWS_AS(BetaModel(0), DomainError);
    CHECK_THROWS_AS(GammaModel(-1.0), DomainError);
    CHECK_THROWS_AS(WeibullModel(0.0), DomainError);
    CHECK_THROWS_AS(LognormalModel(0.0, 0.0), DomainError);
    CHECK_THROWS_AS(ScaledLogGammaModel(0.0, 0.0, 1.0), DomainError);
  }

  TEST_CASE("moments: closed forms and divergence")
  {
    CHECK(error_moment(BetaModel(1), 0.0) == doctest::Approx(1.0));
    CHECK(error_moment(BetaModel(1), 2.0) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(error_moment(LognormalModel(0.0, 1.0), 2.0) ==
          doctest::Approx(std::exp(2.0)).epsilon(1e-12));
    CHECK(error_moment(GammaModel(2.0), 3.0) ==
          doctest::Approx(24.0).epsilon(1e-12)); // Gamma(5)/Gamma(2)
    CHECK(error_moment(WeibullModel(2.0), 2.0) ==
          doctest::Approx(1.0).epsilon(1e-12)); // Gamma(2) = 1
    CHECK_THROWS_AS((void)error_moment(BetaModel(1), -1.0), DomainError);
    CHECK_THROWS_AS((void)error_moment(ScaledLogGammaModel(0, 1, 2), 2.0),
                    DomainError);
  }

  TEST_CASE("moments agree with quadrature against the density")
  {
    const std::vector<ErrorModel> models = {
      BetaModel(3), GammaModel(1.7), WeibullModel(1.3),
      LognormalModel(0.2, 0.7), ScaledLogGammaModel(0.1, 2.0, 4.0)
    };
    for (const auto& m : models) {
      const DensityFn f = density_fn(m);
      for (const double r : { 0.5, 1.0, 2.0 }) {
        // quadrature oracle: E(U^r) = M_{r+1}[g](0)
        const double via_quad = numeric_mellin(f, r + 1.0, 0.0).value.real();
        CHECK(std::abs(via_quad - error_moment(m, r)) <
              1e-6 * std::max(1.0, error_moment(m, r)));
      }
    }
  }

  TEST_CASE("every catalog density has unit mass")
  {
    const std::vector<ErrorModel> models = {
      BetaModel(1),
      BetaModel(4),
      GammaModel(0.7),
      GammaModel(2.5),
      WeibullModel(0.8),
      WeibullModel(2.0),
      LognormalModel(0.0, 1.0),
      ScaledLogGammaModel(0.5, 1.0, 2.0),
      ScaledLogGammaModel(0.0, 2.5, 1.5),
    };
    for (const auto& m : models) {
      const DensityFn f = density_fn(m);
      CHECK(std::abs(f.mass() - 1.0) < 1e-6);
    }
  }

  TEST_CASE("weighted sup-norm closed forms")
  {
    CHECK(weighted_sup_norm(BetaModel(1), 1.0) == doctest::Approx(1.0));
    CHECK(weighted_sup_norm(BetaModel(1), 0.5) == doctest::Approx(1.0));
    CHECK(weighted_sup_norm(LognormalModel(0.0, 1.0), 1.0) ==
          doctest::Approx(1.0 / std::sqrt(2.0 * pi)).epsilon(1e-12));
    // below c = 1/2 the weight x^{2c-1} blows up at the origin
    CHECK(std::isinf(weighted_sup_norm(BetaModel(1), 0.3)));
    CHECK(std::isinf(weighted_sup_norm(GammaModel(0.9), 0.4)));
  }

  TEST_CASE("weighted sup-norm matches a grid search")
  {
    const std::vector<std::pair<ErrorModel, double>> cases = {
      { BetaModel(2), 0.75 },
      { BetaModel(3), 1.4 },
      { GammaModel(1.8), 1.0 },
      { WeibullModel(1.5), 1.2 },
      { LognormalModel(0.3, 0.8), 0.6 },
      { ScaledLogGammaModel(0.2, 2.0, 3.0), 1.1 },
    };
    for (const auto& [m, c] : cases) {
      const double closed = weighted_sup_norm(m, c);
      double best = 0.0;
      for (int i = 0; i <= 40000; ++i) {
        const double x = std::exp(-12.0 + 24.0 * i / 40000.0);
        best = std::max(best, std::pow(x, 2.0 * c - 1.0) * density(m, x));
      }
      CHECK(closed == doctest::Approx(best).epsilon(1e-5));
    }
  }

  TEST_CASE("decay classes carry the documented parameters")
  {
    const DecayClass b2 = decay_class(BetaModel(2), 1.0);
    CHECK(b2.kind == DecayClass::Kind::Smooth);
    CHECK(b2.gamma == doctest::Approx(2.0));

    const DecayClass ln = decay_class(LognormalModel(0.0, 1.0), 1.0);
    CHECK(ln.kind == DecayClass::Kind::SuperSmooth);
    CHECK(ln.gamma == doctest::Approx(0.0));
    CHECK(ln.lambda == doctest::Approx(0.5));
    CHECK(ln.rho == doctest::Approx(2.0));

    const DecayClass g1 = decay_class(GammaModel(1.0), 1.0);
    CHECK(g1.kind == DecayClass::Kind::SuperSmooth);
    CHECK(g1.gamma == doctest::Approx(-0.5));
    CHECK(g1.lambda == doctest::Approx(pi / 2.0));
    CHECK(g1.rho == doctest::Approx(1.0));

    const DecayClass slg =
      decay_class(ScaledLogGammaModel(0.0, 2.5, 3.0), 1.0);
    CHECK(slg.kind == DecayClass::Kind::Smooth);
    CHECK(slg.gamma == doctest::Approx(2.5));
  }

  TEST_CASE("envelope constants bracket the transform on an offset grid")
  {
    const std::vector<std::pair<ErrorModel, double>> cases = {
      { BetaModel(1), 1.0 },      { BetaModel(3), 0.8 },
      { GammaModel(2.0), 1.0 },   { WeibullModel(1.5), 1.0 },
      { WeibullModel(2.0), 1.3 }, { LognormalModel(0.0, 1.0), 1.0 },
      { ScaledLogGammaModel(0.0, 2.0, 3.0), 1.2 },
    };
    for (const auto& [m, c] : cases) {
      const DecayClass d = decay_class(m, c);
      CHECK(d.c_low > 0.0);
      CHECK(d.c_low <= d.c_up);
      for (double t = 0.0371; t <= 200.0; t += 0.3371) {
        const double env = d.envelope(t);
        if (env < 1e-280)
          break;
        const double v = std::abs(analytic_mellin(m, c, t));
        CHECK(v >= d.c_low * env * (1.0 - 1e-9));
        CHECK(v <= d.c_up * env * (1.0 + 1e-9));
      }
    }
  }

  TEST_CASE("lognormal envelope ratio is exactly flat")
  {
    const DecayClass d = decay_class(LognormalModel(0.4, 1.2), 1.5);
    CHECK(d.c_up / d.c_low < 1.0 + 1e-5);
  }

  TEST_CASE("cdf closed forms")
  {
    CHECK(cdf(BetaModel(2), 0.25) == doctest::Approx(1.0 - 0.75 * 0.75));
    CHECK(cdf(GammaModel(1.0), 1.0) ==
          doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
    CHECK(cdf(GammaModel(2.0), 1.0) ==
          doctest::Approx(1.0 - 2.0 * std::exp(-1.0)).epsilon(1e-10));
    CHECK(cdf(WeibullModel(2.0), 1.0) ==
          doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
    CHECK(cdf(LognormalModel(0.0, 1.0), 1.0) == doctest::Approx(0.5));
    // scaled log-gamma with a = 1 is a pareto model: F = 1 - x^{-lambda}
    CHECK(cdf(ScaledLogGammaModel(0.0, 1.0, 2.0), 2.0) ==
          doctest::Approx(1.0 - std::pow(2.0, -2.0)).epsilon(1e-10));
  }

  TEST_CASE("laplace transforms in closed form where available")
  {
    CHECK(*laplace_closed(GammaModel(1.0), 1.0) == doctest::Approx(0.5));
    CHECK(*laplace_closed(BetaModel(1), 2.0) ==
          doctest::Approx((1.0 - std::exp(-2.0)) / 2.0).epsilon(1e-12));
    CHECK(*laplace_closed(BetaModel(2), 1.0) ==
          doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-12));
    CHECK_FALSE(laplace_closed(LognormalModel(0, 1), 1.0).has_value());
    CHECK_FALSE(laplace_closed(WeibullModel(2.0), 1.0).has_value());
  }
}
