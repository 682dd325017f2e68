#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "melfun/error_model.hpp"
#include "melfun/errors.hpp"
#include "melfun/estimator.hpp"
#include "melfun/functionals.hpp"

namespace melfun {

//! Configuration of the data-driven cut-off selection.
//!
//! Theoretical mode keeps the certified admissible set
//!   { k in N : ||g|| Delta(k) <= n,  k <= sqrt(n) / log(n)^2 }
//! and requires chi >= 72. Practical mode relaxes the second constraint to
//! k <= sqrt(n) and allows any chi > 0; its reports are flagged as
//! non-certified.
struct SelectionConfig
{
  enum class GridMode
  {
    Theoretical,
    Practical
  };

  double chi = 72.0;
  GridMode grid_mode = GridMode::Theoretical;
  std::optional<int> max_k_override;
};

struct AdmissibleSet
{
  std::vector<int> ks;  //!< contiguous 1..k_max
  bool fallback = false; //!< true when the set was empty and {1} substituted
};

namespace detail {

inline void check_selection_config(const SelectionConfig& config)
{
  if (!(config.chi > 0.0))
    throw DomainError("selection: chi must be positive");
  if (config.grid_mode == SelectionConfig::GridMode::Theoretical &&
      config.chi < 72.0)
    throw DomainError("selection: theoretical grid mode requires chi >= 72; "
                      "use practical mode for smaller chi");
}

} // namespace detail

//! Admissible integer cut-offs for sample size n. Delta is nondecreasing in
//! k, so the result is always a contiguous range starting at 1; when the
//! constraints leave nothing, {1} is returned with the fallback flag set.
inline AdmissibleSet admissible_set(int n, const FunctionalSpec& spec,
                                    const ErrorModel& model, double c,
                                    const SelectionConfig& config)
{
  detail::check_selection_config(config);
  if (n < 2)
    throw DomainError("admissible_set: need n >= 2");
  const double g_sup = weighted_sup_norm(model, c);
  if (!std::isfinite(g_sup))
    throw DomainError("admissible_set: ||g||_{inf, x^{2c-1}} is infinite for " +
                      model_name(model) + " at c=" + std::to_string(c) +
                      "; the selection rule requires it finite");

  const double root_n = std::sqrt(static_cast<double>(n));
  const double logn = std::log(static_cast<double>(n));
  double cap = config.grid_mode == SelectionConfig::GridMode::Theoretical
                 ? root_n / (logn * logn)
                 : root_n;
  if (config.max_k_override)
    cap = std::min(cap, static_cast<double>(*config.max_k_override));
  const int k_cap = static_cast<int>(std::floor(cap));

  AdmissibleSet out;
  if (k_cap >= 1) {
    const auto deltas = delta_prefix_table(spec, model, c, k_cap);
    for (int k = 1; k <= k_cap; ++k) {
      if (g_sup * deltas[static_cast<std::size_t>(k - 1)] >
          static_cast<double>(n))
        break;
      out.ks.push_back(k);
    }
  }
  if (out.ks.empty()) {
    out.ks = { 1 };
    out.fallback = true;
  }
  return out;
}

//! Plug-in estimate of sigma = E(X^{2(c-1)}):
//!   sigma_hat = (1/n) sum_j Y_j^{2(c-1)} / E(U^{2(c-1)}).
inline double sigma_hat(const Sample& sample, const ErrorModel& model,
                        double c)
{
  const double r = 2.0 * (c - 1.0);
  const double denom = error_moment(model, r); // throws when divergent
  const Eigen::ArrayXd powers = sample.values().pow(r);
  return powers.sum() / static_cast<double>(sample.n()) / denom;
}

//! Penalty  V_hat(k) = 2 chi ||g|| sigma_hat Delta(k) log(n) / n.
inline double v_hat_from(double chi, double g_sup, double sigma_hat_value,
                         double delta_k, int n)
{
  return 2.0 * chi * g_sup * sigma_hat_value * delta_k *
         std::log(static_cast<double>(n)) / static_cast<double>(n);
}

inline double v_hat(int k, const Sample& sample, const FunctionalSpec& spec,
                    const ErrorModel& model, double c,
                    const SelectionConfig& config)
{
  detail::check_selection_config(config);
  const double g_sup = weighted_sup_norm(model, c);
  return v_hat_from(config.chi, g_sup, sigma_hat(sample, model, c),
                    delta_psi_g(spec, model, c, k), sample.n());
}

//! The oracle penalty V(k) = chi ||g|| sigma Delta(k) log(n) / n with the
//! true sigma; only available in simulation settings where sigma is known.
inline double v_true(int k, double sigma, int n, const FunctionalSpec& spec,
                     const ErrorModel& model, double c, double chi)
{
  return chi * weighted_sup_norm(model, c) * sigma *
         delta_psi_g(spec, model, c, k) * std::log(static_cast<double>(n)) /
         static_cast<double>(n);
}

//! Bias proxy  A_hat(k) = max over k' in (k, K_n] of
//! ((theta_hat_{k'} - theta_hat_k)^2 - V_hat(k'))_+ ; zero when the range is
//! empty. Grid, estimates, and penalties are parallel arrays.
inline double a_hat(int k, std::span<const int> grid,
                    std::span<const double> theta_by_k,
                    std::span<const double> v_hat_by_k)
{
  const auto it = std::find(grid.begin(), grid.end(), k);
  if (it == grid.end())
    throw DomainError("a_hat: k is not a grid point");
  const std::size_t at = static_cast<std::size_t>(it - grid.begin());
  double best = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] <= k)
      continue;
    const double diff = theta_by_k[i] - theta_by_k[at];
    best = std::max(best, diff * diff - v_hat_by_k[i]);
  }
  return std::max(best, 0.0);
}

struct PerCutoff
{
  int k = 0;
  double theta = 0.0;
  double v_hat = 0.0;
  double a_hat = 0.0;
};

struct SelectionReport
{
  int k_hat = 1;
  double theta_hat = 0.0;
  double sigma_hat = 0.0;
  std::vector<int> grid;
  std::vector<PerCutoff> per_k;
  bool fallback = false;
  bool certified = false; //!< theoretical grid, chi >= 72, no fallback
  double chi = 0.0;
  SelectionConfig::GridMode grid_mode = SelectionConfig::GridMode::Theoretical;
};

//! Fully data-driven cut-off:  k_hat = argmin_k (A_hat(k) + V_hat(k)) over
//! the admissible set, ties resolved toward the smallest k.
inline SelectionReport select_k(const Sample& sample,
                                const FunctionalSpec& spec,
                                const ErrorModel& model, double c,
                                const SelectionConfig& config)
{
  detail::check_selection_config(config);
  const auto adm = admissible_set(sample.n(), spec, model, c, config);
  const int k_max = adm.ks.back();

  const double g_sup = weighted_sup_norm(model, c);
  const double sig = sigma_hat(sample, model, c);
  const auto thetas = theta_prefix_table(sample, spec, model, c, k_max);
  const auto deltas = delta_prefix_table(spec, model, c, k_max);

  SelectionReport rep;
  rep.grid = adm.ks;
  rep.fallback = adm.fallback;
  rep.sigma_hat = sig;
  rep.chi = config.chi;
  rep.grid_mode = config.grid_mode;
  rep.certified = config.grid_mode == SelectionConfig::GridMode::Theoretical &&
                  config.chi >= 72.0 && !adm.fallback;

  std::vector<double> vs(adm.ks.size());
  std::vector<double> th(adm.ks.size());
  for (std::size_t i = 0; i < adm.ks.size(); ++i) {
    const int k = adm.ks[i];
    th[i] = thetas[static_cast<std::size_t>(k - 1)];
    vs[i] = v_hat_from(config.chi, g_sup, sig,
                       deltas[static_cast<std::size_t>(k - 1)], sample.n());
  }

  double best_obj = std::numeric_limits<double>::infinity();
  rep.per_k.resize(adm.ks.size());
  for (std::size_t i = 0; i < adm.ks.size(); ++i) {
    const int k = adm.ks[i];
    const double a = a_hat(k, adm.ks, th, vs);
    rep.per_k[i] = { k, th[i], vs[i], a };
    const double obj = a + vs[i];
    if (obj < best_obj) { // strict: ties keep the smaller k
      best_obj = obj;
      rep.k_hat = k;
      rep.theta_hat = th[i];
    }
  }
  return rep;
}

} // namespace melfun
