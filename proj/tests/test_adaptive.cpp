#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "melfun/adaptive.hpp"
#include "melfun/rng.hpp"
#include "melfun/simulation.hpp"

using namespace melfun;

namespace {

Sample draw_exp_times_uniform(int n, std::uint64_t seed)
{
  CounterRng rng = CounterRng::derive(seed, 0, 0);
  Eigen::ArrayXd y(n);
  for (int j = 0; j < n; ++j)
    y[j] = rng.next_exponential() * rng.next_uniform();
  return Sample(std::move(y));
}

SelectionConfig practical(double chi)
{
  SelectionConfig cfg;
  cfg.chi = chi;
  cfg.grid_mode = SelectionConfig::GridMode::Practical;
  return cfg;
}

} // namespace

TEST_SUITE("adaptive")
{
  TEST_CASE("theoretical admissible set at n = 10^4 is the singleton {1}")
  {
    SelectionConfig cfg; // theoretical, chi = 72
    const auto adm =
      admissible_set(10000, DensityAt(1.0), BetaModel(1), 1.0, cfg);
    CHECK(adm.ks == std::vector<int>{ 1 });
    CHECK_FALSE(adm.fallback);
  }

  TEST_CASE("small samples leave the theoretical set empty: fallback {1}")
  {
    SelectionConfig cfg;
    const auto adm =
      admissible_set(100, DensityAt(1.0), BetaModel(1), 1.0, cfg);
    CHECK(adm.ks == std::vector<int>{ 1 });
    CHECK(adm.fallback);
  }

  TEST_CASE("practical admissible set solves the variance-proxy constraint")
  {
    const int n = 10000;
    const auto adm =
      admissible_set(n, DensityAt(1.0), BetaModel(1), 1.0, practical(72.0));
    // oracle: largest k with (k + k^3/3)/pi <= n, capped at sqrt(n)
    int want = 0;
    for (int k = 1; k <= 100; ++k)
      if ((k + k * k * k / 3.0) / pi <= n)
        want = k;
    REQUIRE(want >= 1);
    CHECK(adm.ks.front() == 1);
    CHECK(adm.ks.back() == want);
    // contiguous integers
    for (std::size_t i = 0; i < adm.ks.size(); ++i)
      CHECK(adm.ks[i] == static_cast<int>(i) + 1);
  }

  TEST_CASE("max-k override caps the grid")
  {
    SelectionConfig cfg = practical(72.0);
    cfg.max_k_override = 5;
    const auto adm =
      admissible_set(10000, DensityAt(1.0), BetaModel(1), 1.0, cfg);
    CHECK(adm.ks.back() == 5);
  }

  TEST_CASE("an infinite weighted sup-norm violates the selection "
            "assumptions")
  {
    // below c = 1/2 the uniform-error weighted sup-norm is infinite
    CHECK_THROWS_AS((void)admissible_set(1000, DensityAt(1.0), BetaModel(1),
                                         0.3, practical(72.0)),
                    DomainError);
  }

  TEST_CASE("theoretical grid mode insists on the certified penalty "
            "constant")
  {
    SelectionConfig cfg;
    cfg.chi = 1.0; // theoretical mode but small chi
    CHECK_THROWS_AS((void)admissible_set(1000, DensityAt(1.0), BetaModel(1),
                                         1.0, cfg),
                    DomainError);
    CHECK_NOTHROW((void)admissible_set(1000, DensityAt(1.0), BetaModel(1),
                                       1.0, practical(1.0)));
  }

  TEST_CASE("plug-in sigma estimate")
  {
    const Sample s(std::vector<double>{ 1.0, 2.0 });
    // c = 1: trivially one for any sample and model
    CHECK(sigma_hat(s, BetaModel(1), 1.0) == doctest::Approx(1.0));
    // c = 2: mean(Y^2) / E(U^2) = 2.5 / (1/3)
    CHECK(sigma_hat(s, BetaModel(1), 2.0) == doctest::Approx(7.5));
    // c = 1/2 needs E(U^{-1}), divergent for the uniform error
    CHECK_THROWS_AS((void)sigma_hat(s, BetaModel(1), 0.5), DomainError);
  }

  TEST_CASE("penalty arithmetic")
  {
    CHECK(v_hat_from(72.0, 1.0, 1.0, 0.0, 10000) == 0.0);
    const double delta = 4.0 / (3.0 * pi);
    const double want = 2.0 * 72.0 * delta * std::log(1e4) / 1e4;
    CHECK(v_hat_from(72.0, 1.0, 1.0, delta, 10000) ==
          doctest::Approx(want).epsilon(1e-12));
    CHECK(want == doctest::Approx(0.05628).epsilon(1e-3));
    // doubling the sigma estimate doubles the penalty exactly
    CHECK(v_hat_from(72.0, 1.0, 2.0, delta, 10000) ==
          2.0 * v_hat_from(72.0, 1.0, 1.0, delta, 10000));
    // the oracle penalty V uses chi, the plug-in uses 2 chi
    const Sample s(std::vector<double>{ 1.0, 1.0 });
    const double vh =
      v_hat(1, s, DensityAt(1.0), BetaModel(1), 1.0, practical(72.0));
    const double vt = v_true(1, 1.0, 2, DensityAt(1.0), BetaModel(1), 1.0,
                             72.0);
    CHECK(vh == doctest::Approx(2.0 * vt).epsilon(1e-12));
  }

  TEST_CASE("bias proxy over explicit tables")
  {
    const std::vector<int> grid = { 1, 2 };
    const std::vector<double> theta = { 0.3, 0.5 };
    const std::vector<double> vs = { 0.5, 0.01 };
    CHECK(a_hat(2, grid, theta, vs) == 0.0); // empty supremum at max k
    CHECK(a_hat(1, grid, theta, vs) == doctest::Approx(0.03));
    const std::vector<double> big_v = { 1.0, 1.0 };
    CHECK(a_hat(1, grid, theta, big_v) == 0.0); // positive part clips
    CHECK_THROWS_AS((void)a_hat(3, grid, theta, vs), DomainError);
  }

  TEST_CASE("selection on the singleton grid returns k = 1")
  {
    const Sample s = draw_exp_times_uniform(100, 2);
    SelectionConfig cfg; // theoretical: empty set at n = 100, fallback {1}
    const auto rep = select_k(s, DensityAt(1.0), BetaModel(1), 1.0, cfg);
    CHECK(rep.k_hat == 1);
    CHECK(rep.fallback);
    CHECK_FALSE(rep.certified);
    CHECK(rep.grid == std::vector<int>{ 1 });
  }

  TEST_CASE("selection returns the first minimizer of the objective")
  {
    const Sample s = draw_exp_times_uniform(2000, 7);
    const auto rep =
      select_k(s, DensityAt(1.0), BetaModel(1), 1.0, practical(0.5));
    REQUIRE(!rep.per_k.empty());
    int first_min = rep.per_k.front().k;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& row : rep.per_k) {
      const double obj = row.a_hat + row.v_hat;
      if (obj < best) {
        best = obj;
        first_min = row.k;
      }
    }
    CHECK(rep.k_hat == first_min);
    // the reported estimate is the table entry at k_hat
    for (const auto& row : rep.per_k)
      if (row.k == rep.k_hat)
        CHECK(rep.theta_hat == row.theta);
    // the bias proxy vanishes at the top of the grid
    CHECK(rep.per_k.back().a_hat == 0.0);
  }

  TEST_CASE("selection is exactly permutation invariant")
  {
    std::vector<double> ys;
    CounterRng rng = CounterRng::derive(21, 0, 0);
    for (int j = 0; j < 400; ++j)
      ys.push_back(rng.next_exponential() * rng.next_uniform());
    std::vector<double> shuffled = ys;
    std::mt19937 mt(5);
    std::shuffle(shuffled.begin(), shuffled.end(), mt);
    const auto ra =
      select_k(Sample(ys), DensityAt(1.0), BetaModel(1), 1.0, practical(1.0));
    const auto rb = select_k(Sample(shuffled), DensityAt(1.0), BetaModel(1),
                             1.0, practical(1.0));
    CHECK(ra.k_hat == rb.k_hat);
    CHECK(ra.theta_hat == rb.theta_hat);
    CHECK(ra.sigma_hat == rb.sigma_hat);
  }

  TEST_CASE("scaling the penalty constant scales the penalties exactly and "
            "weakly shrinks the bias proxy")
  {
    const Sample s = draw_exp_times_uniform(1500, 13);
    const auto r1 =
      select_k(s, DensityAt(1.0), BetaModel(1), 1.0, practical(0.25));
    const auto r2 =
      select_k(s, DensityAt(1.0), BetaModel(1), 1.0, practical(0.5));
    REQUIRE(r1.per_k.size() == r2.per_k.size());
    for (std::size_t i = 0; i < r1.per_k.size(); ++i) {
      CHECK(r2.per_k[i].v_hat == 2.0 * r1.per_k[i].v_hat);
      CHECK(r2.per_k[i].a_hat <= r1.per_k[i].a_hat);
    }
  }

  TEST_CASE("the sigma estimate concentrates at the root-n rate")
  {
    // replication standard deviation of sigma_hat across n: log-log slope
    // near -1/2
    const std::vector<int> ns = { 100, 1000, 10000 };
    std::vector<double> log_sd, log_n;
    for (const int n : ns) {
      const int reps = 200;
      std::vector<double> sig(reps);
      for (int r = 0; r < reps; ++r) {
        CounterRng rng =
          CounterRng::derive(777, static_cast<std::uint64_t>(r), 0);
        Eigen::ArrayXd y(n);
        for (int j = 0; j < n; ++j)
          y[j] = rng.next_exponential() * rng.next_uniform();
        sig[r] = sigma_hat(Sample(std::move(y)), BetaModel(1), 2.0);
      }
      log_sd.push_back(std::log(std::sqrt(sample_variance(sig))));
      log_n.push_back(std::log(static_cast<double>(n)));
    }
    const auto fit = fit_slope(log_n, log_sd);
    CHECK(fit.slope == doctest::Approx(-0.5).epsilon(0.2));
    CHECK(std::abs(fit.slope + 0.5) < 0.1);
  }
}
