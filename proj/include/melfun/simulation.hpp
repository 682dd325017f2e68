#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>
#include <variant>
#include <vector>

#include "melfun/adaptive.hpp"
#include "melfun/decay.hpp"
#include "melfun/error_model.hpp"
#include "melfun/errors.hpp"
#include "melfun/estimator.hpp"
#include "melfun/functionals.hpp"
#include "melfun/rng.hpp"
#include "melfun/util.hpp"

namespace melfun {

//! Fixed spectral cut-off.
struct FixedK
{
  double k = 1.0;
};

//! Cut-off growing with the sample size: k = coeff * n^exponent.
struct KPower
{
  double coeff = 1.0;
  double exponent = 0.25;
};

//! Cut-off minimizing the Monte Carlo risk over the practical admissible
//! grid; only meaningful inside experiments where the truth is known.
struct OracleK
{
};

using SelectionChoice = std::variant<FixedK, KPower, OracleK, SelectionConfig>;

//! One Monte Carlo experiment: observations Y = X * U with X from `target`
//! and U from `error`, both catalog distributions.
struct Scenario
{
  ErrorModel target = GammaModel(1.0);
  ErrorModel error = BetaModel(1);
  FunctionalSpec functional = DensityAt(1.0);
  double c = 1.0;
  int n = 1000;
  int replications = 200;
  std::uint64_t seed = 1;
  SelectionChoice selection = FixedK{ 1.0 };
};

inline void validate_scenario(const Scenario& sc)
{
  require_admissible(sc.target, sc.c);
  require_admissible(sc.error, sc.c);
  require_admissible(sc.functional, sc.c);
  if (!moment_exists(sc.target, 2.0 * sc.c - 2.0))
    throw DomainError("scenario: E(X^{2c-2}) diverges for the target at c=" +
                      std::to_string(sc.c));
  if (sc.n < 1)
    throw DomainError("scenario: n must be >= 1");
  if (sc.replications < 1)
    throw DomainError("scenario: replications must be >= 1");
}

namespace detail {

constexpr std::uint64_t role_target = 1;
constexpr std::uint64_t role_error = 2;

inline double sample_one(const ErrorModel& m, CounterRng& rng)
{
  struct V
  {
    CounterRng& rng;
    double operator()(const BetaModel& g) const
    {
      // inverse cdf of F(x) = 1 - (1-x)^b
      return 1.0 - std::pow(1.0 - rng.next_uniform(), 1.0 / g.b);
    }
    double operator()(const ScaledLogGammaModel& g) const
    {
      const double w = g.a == 1.0 ? rng.next_exponential() / g.lambda
                                  : sample_gamma(rng, g.a) / g.lambda;
      return std::exp(g.mu + w);
    }
    double operator()(const GammaModel& g) const
    {
      if (g.d == 1.0)
        return rng.next_exponential();
      return sample_gamma(rng, g.d);
    }
    double operator()(const WeibullModel& g) const
    {
      return std::pow(rng.next_exponential(), 1.0 / g.m);
    }
    double operator()(const LognormalModel& g) const
    {
      return std::exp(g.mu + g.lambda * rng.next_normal());
    }
  };
  return std::visit(V{ rng }, m);
}

//! Run fn(0), ..., fn(count-1) on `threads` workers. Each index is
//! self-contained, so the outcome is identical for any thread count.
inline void parallel_for(int count, int threads,
                         const std::function<void(int)>& fn)
{
  if (threads <= 0)
    threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i)
      fn(i);
    return;
  }
  std::atomic<int> next{ 0 };
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count)
          return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(error_mutex);
          if (!first_error)
            first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool)
    th.join();
  if (first_error)
    std::rethrow_exception(first_error);
}

} // namespace detail

//! Sample drawn for one replication, with the latent X kept for diagnostics.
//! X and U use separate derived streams, so the same seed produces the same
//! X draws under every error model.
struct Drawn
{
  Sample y;
  Eigen::ArrayXd x;
};

inline Drawn draw_sample(const Scenario& sc, int replication)
{
  CounterRng rng_x = CounterRng::derive(sc.seed,
                                        static_cast<std::uint64_t>(replication),
                                        detail::role_target);
  CounterRng rng_u = CounterRng::derive(sc.seed,
                                        static_cast<std::uint64_t>(replication),
                                        detail::role_error);
  Eigen::ArrayXd x(sc.n), y(sc.n);
  for (int j = 0; j < sc.n; ++j) {
    x[j] = detail::sample_one(sc.target, rng_x);
    y[j] = x[j] * detail::sample_one(sc.error, rng_u);
  }
  return { Sample(std::move(y)), std::move(x) };
}

struct McResult
{
  double mse = 0.0;
  double se = 0.0; //!< jackknife standard error of the mse
};

namespace detail {

inline double resolve_fixed_k(const SelectionChoice& choice, int n)
{
  if (const auto* f = std::get_if<FixedK>(&choice))
    return f->k;
  if (const auto* p = std::get_if<KPower>(&choice))
    return p->coeff * std::pow(static_cast<double>(n), p->exponent);
  throw DomainError("scenario selection mode has no per-sample cut-off");
}

} // namespace detail

//! Monte Carlo mean squared error with a caller-supplied estimator; the
//! public mc_mse wires in the spectral cut-off estimator. Per-replication
//! squared errors are aggregated with a fixed reduction order, so results do
//! not depend on the thread count.
template<class Estimate>
McResult mc_mse_with(const Scenario& sc, Estimate&& estimate, int threads = 0)
{
  validate_scenario(sc);
  const double truth = true_value(sc.target, sc.functional);
  std::vector<double> sq(static_cast<std::size_t>(sc.replications));
  detail::parallel_for(sc.replications, threads, [&](int r) {
    const Drawn d = draw_sample(sc, r);
    const double est = estimate(d, r);
    sq[static_cast<std::size_t>(r)] = (est - truth) * (est - truth);
  });
  return { mean(sq), jackknife_se_mean(sq) };
}

//! Cut-off and estimate from one replication.
struct ReplicationOutcome
{
  double k = 0.0;
  double theta = 0.0;
};

//! Run every replication of the scenario, recording the cut-off actually
//! used (fixed, n-dependent, or data-driven) and the resulting estimate.
inline std::vector<ReplicationOutcome> run_replications(const Scenario& sc,
                                                        int threads = 0)
{
  validate_scenario(sc);
  std::vector<ReplicationOutcome> out(
    static_cast<std::size_t>(sc.replications));
  if (const auto* cfg = std::get_if<SelectionConfig>(&sc.selection)) {
    detail::parallel_for(sc.replications, threads, [&](int r) {
      const Drawn d = draw_sample(sc, r);
      const auto rep = select_k(d.y, sc.functional, sc.error, sc.c, *cfg);
      out[static_cast<std::size_t>(r)] = { static_cast<double>(rep.k_hat),
                                           rep.theta_hat };
    });
    return out;
  }
  const double k = detail::resolve_fixed_k(sc.selection, sc.n);
  detail::parallel_for(sc.replications, threads, [&](int r) {
    const Drawn d = draw_sample(sc, r);
    out[static_cast<std::size_t>(r)] = {
      k, theta_hat(d.y, sc.functional, sc.error, sc.c, k).theta_hat
    };
  });
  return out;
}

inline McResult mc_mse(const Scenario& sc, int threads = 0)
{
  if (const auto* cfg = std::get_if<SelectionConfig>(&sc.selection)) {
    return mc_mse_with(
      sc,
      [&, cfg](const Drawn& d, int) {
        return select_k(d.y, sc.functional, sc.error, sc.c, *cfg).theta_hat;
      },
      threads);
  }
  const double k = detail::resolve_fixed_k(sc.selection, sc.n);
  return mc_mse_with(
    sc,
    [&](const Drawn& d, int) {
      return theta_hat(d.y, sc.functional, sc.error, sc.c, k).theta_hat;
    },
    threads);
}

struct OracleResult
{
  int k_star = 1;
  double mse = 0.0;
  double se = 0.0;
  std::vector<double> mse_by_k; //!< parallel to the grid
};

//! Empirical risk minimizer over a cut-off grid with shared random numbers:
//! every k sees exactly the same samples, so differences in the risk curve
//! reflect the estimator alone. Ties go to the smallest k.
inline OracleResult oracle_cutoff(const Scenario& sc,
                                  const std::vector<int>& grid,
                                  int threads = 0)
{
  validate_scenario(sc);
  if (grid.empty())
    throw DomainError("oracle_cutoff: grid must be nonempty");
  const double truth = true_value(sc.target, sc.functional);
  const int k_max = *std::max_element(grid.begin(), grid.end());
  const std::size_t R = static_cast<std::size_t>(sc.replications);

  std::vector<std::vector<double>> sq(grid.size(),
                                      std::vector<double>(R, 0.0));
  detail::parallel_for(sc.replications, threads, [&](int r) {
    const Drawn d = draw_sample(sc, r);
    const auto table =
      theta_prefix_table(d.y, sc.functional, sc.error, sc.c, k_max);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double th = table[static_cast<std::size_t>(grid[i] - 1)];
      sq[i][static_cast<std::size_t>(r)] = (th - truth) * (th - truth);
    }
  });

  OracleResult out;
  out.mse_by_k.resize(grid.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.mse_by_k[i] = mean(sq[i]);
    if (out.mse_by_k[i] < best) {
      best = out.mse_by_k[i];
      out.k_star = grid[i];
      out.mse = out.mse_by_k[i];
      out.se = jackknife_se_mean(sq[i]);
    }
  }
  return out;
}

//! Rate-optimal deterministic cut-off k_n = n^{1/(2s+2gamma)}.
inline double theoretical_cutoff(double s, double gamma, double n)
{
  return std::pow(n, 1.0 / (2.0 * s + 2.0 * gamma));
}

//! Predicted log-log slope of the mean squared error in n.
inline double theory_slope(double s, double p, double gamma, Regime regime)
{
  if (regime == Regime::Parametric)
    return -1.0;
  return -(2.0 * s + 2.0 * p - 1.0) / (2.0 * s + 2.0 * gamma);
}

struct RatePoint
{
  long n = 0;
  double mse = 0.0;
  double se = 0.0;
};

struct RateReport
{
  std::vector<RatePoint> points;
  double slope = 0.0;
  double slope_lo = 0.0;
  double slope_hi = 0.0;
  double theory_slope = std::numeric_limits<double>::quiet_NaN();
};

struct SlopeFit
{
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};

//! Ordinary least squares of y on x.
inline SlopeFit fit_slope(std::span<const double> x, std::span<const double> y)
{
  const std::size_t m = x.size();
  if (m < 2 || y.size() != m)
    throw DomainError("fit_slope: need >= 2 matched points");
  const double xm = mean(x);
  const double ym = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (x[i] - xm) * (x[i] - xm);
    sxy += (x[i] - xm) * (y[i] - ym);
  }
  if (sxx == 0.0)
    throw DomainError("fit_slope: degenerate abscissae");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ym - fit.slope * xm;
  if (m > 2) {
    double ss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double e = y[i] - fit.intercept - fit.slope * x[i];
      ss += e * e;
    }
    fit.slope_se = std::sqrt(ss / static_cast<double>(m - 2) / sxx);
  }
  return fit;
}

//! Assemble a rate report from per-n risk estimates (OLS on the log-log
//! scale, normal-approximation 95% band on the slope).
inline RateReport rate_report_from_points(const std::vector<RatePoint>& pts,
                                          double theory =
                                            std::numeric_limits<
                                              double>::quiet_NaN())
{
  if (pts.size() < 2)
    throw DomainError("rate report: need at least 2 sample sizes");
  std::vector<double> lx, ly;
  for (const auto& p : pts) {
    if (!(p.mse > 0.0))
      throw DomainError("rate report: nonpositive mse at n=" +
                        std::to_string(p.n));
    lx.push_back(std::log(static_cast<double>(p.n)));
    ly.push_back(std::log(p.mse));
  }
  const SlopeFit fit = fit_slope(lx, ly);
  RateReport rep;
  rep.points = pts;
  rep.slope = fit.slope;
  rep.slope_lo = fit.slope - 1.96 * fit.slope_se;
  rep.slope_hi = fit.slope + 1.96 * fit.slope_se;
  rep.theory_slope = theory;
  return rep;
}

//! Run the scenario across sample sizes and regress log(mse) on log(n).
//! n_list must be strictly increasing; each point needs enough replications
//! for a stable risk estimate. OracleK selection searches the practical
//! admissible grid at each n.
inline RateReport rate_experiment(const Scenario& base,
                                  const std::vector<long>& n_list,
                                  double theory_slope_value =
                                    std::numeric_limits<double>::quiet_NaN(),
                                  int threads = 0)
{
  if (n_list.size() < 3)
    throw DomainError("rate_experiment: need at least 3 sample sizes");
  for (std::size_t i = 1; i < n_list.size(); ++i)
    if (n_list[i] <= n_list[i - 1])
      throw DomainError("rate_experiment: n_list must be strictly increasing");

  std::vector<RatePoint> pts;
  for (const long n : n_list) {
    Scenario sc = base;
    sc.n = static_cast<int>(n);
    McResult r;
    if (std::holds_alternative<OracleK>(sc.selection)) {
      SelectionConfig practical;
      practical.chi = 72.0;
      practical.grid_mode = SelectionConfig::GridMode::Practical;
      const auto adm =
        admissible_set(sc.n, sc.functional, sc.error, sc.c, practical);
      const auto oracle = oracle_cutoff(sc, adm.ks, threads);
      r = { oracle.mse, oracle.se };
    } else {
      r = mc_mse(sc, threads);
    }
    pts.push_back({ n, r.mse, r.se });
  }
  return rate_report_from_points(pts, theory_slope_value);
}

//! Mellin-Sobolev seminorm  ( int (1+t^2)^s |M(t)|^2 dt )^{1/2}  with a
//! certified truncation from the decay class; returns +inf when the lower
//! envelope certifies divergence.
inline double sobolev_seminorm(const std::function<cdouble(double)>& mellin,
                               const DecayClass& decay, double s,
                               double rel_tol = 1e-6)
{
  if (!weighted_l2_finite(decay, s))
    return std::numeric_limits<double>::infinity();

  const auto integrand = [&](double t) {
    const double a = std::abs(mellin(t));
    return std::pow(1.0 + t * t, s) * a * a;
  };
  // grow T until the certified tail is negligible against the bulk; slowly
  // convergent polynomial tails can push T past 1e30, which costs only a
  // few extra power-law panels per doubling
  double T = 8.0;
  double bulk = 2.0 * quad::integrate_to_rel(integrand, 0.0, T, 1e-9).value;
  for (int i = 0; i < 140; ++i) {
    const auto tail = weighted_l2_tail_bound(decay, s, T);
    if (tail.t_start > T) {
      bulk +=
        2.0 * quad::integrate_to_rel(integrand, T, tail.t_start, 1e-9).value;
      T = tail.t_start;
    }
    if (2.0 * tail.bound <= rel_tol * bulk)
      return std::sqrt(bulk + tail.bound); // half the bound as a mid estimate
    const double T2 = 2.0 * T;
    bulk += 2.0 * quad::integrate_to_rel(integrand, T, T2, 1e-9).value;
    T = T2;
  }
  throw NumericError("sobolev_seminorm: truncation certificate not reached",
                     std::sqrt(bulk), std::numeric_limits<double>::infinity());
}

inline double sobolev_seminorm(const ErrorModel& target, double s, double c,
                               double rel_tol = 1e-6)
{
  return sobolev_seminorm(
    [&](double t) { return analytic_mellin(target, c, t); },
    decay_class(target, c), s, rel_tol);
}

//! L1 tail  int_k^inf |Psi(t) M_c[f](t)| dt  for a catalog target: adaptive
//! quadrature out to the certified-regime point plus an envelope bound.
inline double bias_l1_tail(const FunctionalSpec& spec,
                           const ErrorModel& target, double c, double k)
{
  const DecayClass fd = decay_class(target, c);
  const auto integrand = [&](double t) {
    return std::abs(psi(spec, c, t)) * std::abs(analytic_mellin(target, c, t));
  };
  const auto envelope = [&](double t) {
    return std::abs(psi(spec, c, t)) * fd.c_up * fd.envelope(t);
  };
  double T = std::max(k, 8.0);
  for (int i = 0; i < 60; ++i, T *= 2.0) {
    // the envelope must be decreasing before the geometric bound applies
    bool decreasing = true;
    for (double t = T; t < T + 5.0; t += 1.0)
      decreasing = decreasing && envelope(t + 1.0) <= envelope(t) * (1 + 1e-9);
    if (!decreasing)
      continue;
    const double tail = quad::decreasing_tail_bound(envelope, T);
    const double bulk =
      k < T ? quad::integrate_to_rel(integrand, k, T, 1e-9).value : 0.0;
    if (tail <= 1e-9 * bulk + 1e-15)
      return bulk + tail;
  }
  throw NumericError("bias_l1_tail: envelope tail never became negligible",
                     0.0, std::numeric_limits<double>::infinity());
}

} // namespace melfun
