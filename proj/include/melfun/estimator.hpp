#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <vector>

#include "melfun/error_model.hpp"
#include "melfun/errors.hpp"
#include "melfun/functionals.hpp"
#include "melfun/quadrature.hpp"
#include "melfun/util.hpp"

namespace melfun {

//! Validated sample of positive observations. Values are stored sorted, so
//! every statistic computed from a Sample is exactly invariant under
//! permutations of the input.
class Sample
{
public:
  explicit Sample(Eigen::ArrayXd ys)
    : values_(std::move(ys))
  {
    if (values_.size() < 1)
      throw DomainError("Sample: need at least one observation");
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
      const double y = values_[i];
      if (!std::isfinite(y) || !(y > 0.0))
        throw DomainError("Sample: observations must be positive and finite");
      if (std::abs(std::log(y)) > 700.0)
        throw DomainError("Sample: |log Y| too large for stable powers");
    }
    std::sort(values_.data(), values_.data() + values_.size());
  }

  explicit Sample(const std::vector<double>& ys)
    : Sample(Eigen::Map<const Eigen::ArrayXd>(ys.data(),
                                              static_cast<Eigen::Index>(
                                                ys.size()))
               .eval())
  {
  }

  const Eigen::ArrayXd& values() const { return values_; }
  int n() const { return static_cast<int>(values_.size()); }

private:
  Eigen::ArrayXd values_;
};

//! Empirical Mellin transform  (1/n) sum_j Y_j^{c-1+it}, evaluated as
//! Y^{c-1} (cos(t log Y) + i sin(t log Y)).
inline cdouble empirical_mellin(const Sample& sample, double c, double t)
{
  const Eigen::ArrayXd& y = sample.values();
  const Eigen::ArrayXd w = y.pow(c - 1.0);
  const Eigen::ArrayXd phase = t * y.log();
  const double re = (w * phase.cos()).sum();
  const double im = (w * phase.sin()).sum();
  return cdouble(re, im) / static_cast<double>(sample.n());
}

//! Variance proxy  Delta(k) = (1/2pi) int_{-k}^{k} |Psi(t)/M_c[g](t)|^2 dt,
//! computed as the half-range integral of the even integrand.
inline double delta_psi_g(const FunctionalSpec& spec, const ErrorModel& model,
                          double c, double k, double rel_tol = 1e-9)
{
  require_admissible(spec, c);
  require_admissible(model, c);
  if (k < 0.0)
    throw DomainError("delta_psi_g: k must be nonnegative");
  if (k == 0.0)
    return 0.0;
  const auto integrand = [&](double t) {
    const double r = std::abs(psi(spec, c, t) / analytic_mellin(model, c, t));
    return r * r;
  };
  return quad::integrate_to_rel(integrand, 0.0, k, rel_tol).value / pi;
}

//! Prefix table Delta(1), ..., Delta(k_max) on the integer grid.
inline std::vector<double> delta_prefix_table(const FunctionalSpec& spec,
                                              const ErrorModel& model,
                                              double c, int k_max)
{
  const auto integrand = [&](double t) {
    const double r = std::abs(psi(spec, c, t) / analytic_mellin(model, c, t));
    return r * r;
  };
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(k_max));
  double acc = 0.0;
  for (int k = 1; k <= k_max; ++k) {
    acc += quad::integrate_to_rel(integrand, k - 1.0, static_cast<double>(k),
                                  1e-10, 1e-15)
             .value;
    out.push_back(acc / pi);
  }
  return out;
}

struct ThetaDiagnostics
{
  double grid_step = 0.0;
  long grid_points = 0;
  double elapsed_seconds = 0.0;
};

struct EstimateReport
{
  double theta_hat = 0.0;
  double k = 0.0;
  double delta_k = 0.0;
  Regime regime = Regime::Nonparametric;
  int n = 0;
  ThetaDiagnostics diagnostics;
};

namespace detail {

// Per-(sample, c) precomputation for the t sweep: weights Y^{c-1}, logs, and
// the uniform grid step that resolves the fastest data oscillation.
struct SweepData
{
  Eigen::ArrayXd w;
  Eigen::ArrayXd log_y;
  double max_abs_log = 0.0;
  double step_bound = 0.05;
};

inline SweepData make_sweep_data(const Sample& sample, double c)
{
  SweepData s;
  s.log_y = sample.values().log();
  s.w = ((c - 1.0) * s.log_y).exp();
  if (!s.w.isFinite().all())
    throw DomainError("theta_hat: Y^{c-1} overflows for this sample and c");
  s.max_abs_log = s.log_y.abs().maxCoeff();
  s.step_bound = std::min(0.05, pi / (8.0 * std::max(s.max_abs_log, 1e-12)));
  return s;
}

// One Simpson sweep of  Re[ Psi(-t) Mhat(t) / M_g(t) ] / pi  over [0, k_max]
// on a uniform grid; `on_value` receives the integrand at every node so the
// caller can form prefix integrals. The empirical transform is advanced by
// one complex rotation per observation and node.
template<class OnValue>
void sweep_integrand(const SweepData& s, const FunctionalSpec& spec,
                     const ErrorModel& model, double c, double step,
                     long n_points, OnValue&& on_value)
{
  const double n = static_cast<double>(s.w.size());
  Eigen::ArrayXcd acc =
    Eigen::ArrayXcd::Constant(s.w.size(), cdouble(1.0, 0.0));
  Eigen::ArrayXcd rot(s.w.size());
  rot.real() = (step * s.log_y).cos();
  rot.imag() = (step * s.log_y).sin();
  for (long j = 0; j <= n_points; ++j) {
    const double t = step * static_cast<double>(j);
    const cdouble mhat(((s.w * acc.real()).sum()) / n,
                       ((s.w * acc.imag()).sum()) / n);
    const cdouble val =
      psi(spec, c, -t) * mhat / analytic_mellin(model, c, t);
    on_value(j, t, val.real());
    acc *= rot;
  }
}

} // namespace detail

//! Spectral cut-off estimate
//!   theta_hat_k = (1/2pi) int_{-k}^{k} Psi(-t) Mhat_c(t) / M_c[g](t) dt,
//! computed as twice the real part of the half-range integral on a uniform
//! Simpson grid with step <= min(0.05, pi / (8 max_j |log Y_j|)).
inline EstimateReport theta_hat(const Sample& sample,
                                const FunctionalSpec& spec,
                                const ErrorModel& model, double c, double k)
{
  require_admissible(spec, c);
  require_admissible(model, c);
  if (!(k > 0.0))
    throw DomainError("theta_hat: cut-off k must be positive");

  const auto t0 = std::chrono::steady_clock::now();
  const auto s = detail::make_sweep_data(sample, c);
  long n_half = static_cast<long>(std::ceil(k / s.step_bound / 2.0));
  n_half = std::max<long>(n_half, 1);
  const long n_points = 2 * n_half; // even interval count for Simpson
  const double step = k / static_cast<double>(n_points);

  double simpson = 0.0;
  detail::sweep_integrand(s, spec, model, c, step, n_points,
                          [&](long j, double, double f) {
                            const double wj =
                              (j == 0 || j == n_points) ? 1.0
                              : (j % 2 == 1)            ? 4.0
                                                        : 2.0;
                            simpson += wj * f;
                          });
  const double theta = simpson * step / 3.0 / pi;

  EstimateReport rep;
  rep.theta_hat = theta;
  rep.k = k;
  rep.delta_k = delta_psi_g(spec, model, c, k);
  rep.regime = classify_regime(psi_decay(spec, c), decay_class(model, c));
  rep.n = sample.n();
  rep.diagnostics.grid_step = step;
  rep.diagnostics.grid_points = n_points + 1;
  rep.diagnostics.elapsed_seconds =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
  return rep;
}

//! theta_hat on every integer cut-off 1..k_max from a single sweep. Block
//! [k-1, k] is a self-contained Simpson rule, so the prefix value at each
//! integer equals the composite rule on [0, k].
inline std::vector<double> theta_prefix_table(const Sample& sample,
                                              const FunctionalSpec& spec,
                                              const ErrorModel& model,
                                              double c, int k_max)
{
  require_admissible(spec, c);
  require_admissible(model, c);
  if (k_max < 1)
    throw DomainError("theta_prefix_table: k_max must be >= 1");

  const auto s = detail::make_sweep_data(sample, c);
  long m = static_cast<long>(std::ceil(1.0 / s.step_bound / 2.0));
  m = std::max<long>(m, 1) * 2; // nodes per unit block, even
  const double step = 1.0 / static_cast<double>(m);
  const long n_points = m * static_cast<long>(k_max);

  std::vector<double> table;
  table.reserve(static_cast<std::size_t>(k_max));
  double total = 0.0;   // completed blocks
  double block = 0.0;   // Simpson accumulator of the current block
  detail::sweep_integrand(
    s, spec, model, c, step, n_points, [&](long j, double, double f) {
      const long r = j % m;
      if (j > 0 && r == 0) {
        // f is both the last node of this block and the first of the next
        block += f;
        total += block * step / 3.0;
        table.push_back(total / pi);
        block = f;
        return;
      }
      block += (r == 0) ? f : (r % 2 == 1 ? 4.0 : 2.0) * f;
    });
  return table;
}

//! Mean squared error bound built from the first-moment route:
//!   tail^2 + (E(Y^{2(c-1)})/n) * ((1/2pi) int_{-k}^{k} |Psi/M_c[g]|)^2.
inline double risk_bound_l1(double y_moment, int n, const FunctionalSpec& spec,
                            const ErrorModel& model, double c, double k,
                            double bias_l1_tail)
{
  require_admissible(spec, c);
  require_admissible(model, c);
  const auto integrand = [&](double t) {
    return std::abs(psi(spec, c, t) / analytic_mellin(model, c, t));
  };
  const double l1 =
    k > 0.0 ? quad::integrate_to_rel(integrand, 0.0, k, 1e-9).value / pi : 0.0;
  return bias_l1_tail * bias_l1_tail +
         y_moment / static_cast<double>(n) * l1 * l1;
}

//! Mean squared error bound built from the weighted sup-norm route:
//!   tail^2 + ||g||_{inf, x^{2c-1}} * sigma * Delta(k) / n.
inline double risk_bound_delta(double g_sup, double sigma, int n,
                               double delta_k, double bias_l1_tail)
{
  return bias_l1_tail * bias_l1_tail +
         g_sup * sigma * delta_k / static_cast<double>(n);
}

} // namespace melfun
