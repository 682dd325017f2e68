#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

#include "melfun/errors.hpp"
#include "melfun/util.hpp"

namespace melfun::quad {

template<class T>
struct Integral
{
  T value{};
  double error = 0.0; //!< estimated absolute error
  long evaluations = 0;
};

namespace detail {

template<class T>
double magnitude(const T& x)
{
  return std::abs(x);
}

} // namespace detail

//! Globally adaptive Simpson quadrature: panels live in a worst-error heap
//! and the budget is spent where the integrand is hardest, so integrable
//! endpoint singularities converge instead of starving a per-level
//! tolerance. `initial_panels` forces a minimum resolution before the error
//! estimator is trusted (needed for oscillatory integrands).
//!
//! Throws NumericError with the last estimate and error bound when the
//! split budget is exhausted.
template<class F>
auto adaptive_simpson(F&& f, double a, double b, double abs_tol,
                      long max_splits = 100000, int initial_panels = 1)
  -> Integral<std::decay_t<decltype(f(a))>>
{
  using T = std::decay_t<decltype(f(a))>;
  if (a == b)
    return { T{}, 0.0, 0 };

  // One leaf = one panel with its coarse and refined Simpson values.
  struct Leaf
  {
    double a, b;
    T fa, fm, fb;   // refined-level nodes reused on split
    T coarse, fine; // Simpson and two-half Simpson
    double err;
  };
  long evals = 0;
  const auto eval = [&](double x) {
    ++evals;
    return f(x);
  };
  const auto make = [&](double x0, double x1, const T& f0, const T& f1) {
    Leaf lf;
    lf.a = x0;
    lf.b = x1;
    lf.fa = f0;
    lf.fb = f1;
    const double m = 0.5 * (x0 + x1);
    lf.fm = eval(m);
    const T flm = eval(0.5 * (x0 + m));
    const T frm = eval(0.5 * (m + x1));
    const double h = x1 - x0;
    lf.coarse = (h / 6.0) * (lf.fa + 4.0 * lf.fm + lf.fb);
    lf.fine = (h / 12.0) * (lf.fa + 4.0 * flm + 2.0 * lf.fm + 4.0 * frm +
                            lf.fb);
    lf.err = detail::magnitude(lf.fine - lf.coarse) / 15.0;
    return lf;
  };

  std::vector<Leaf> leaves;
  const int n0 = std::max(1, initial_panels);
  leaves.reserve(static_cast<std::size_t>(n0) + 64);
  {
    T f_prev = eval(a);
    for (int j = 0; j < n0; ++j) {
      const double x0 = a + (b - a) * static_cast<double>(j) / n0;
      const double x1 = a + (b - a) * static_cast<double>(j + 1) / n0;
      const T f_next = eval(x1);
      leaves.push_back(make(x0, x1, f_prev, f_next));
      f_prev = f_next;
    }
  }

  using HeapItem = std::pair<double, std::size_t>; // (error, leaf index)
  std::priority_queue<HeapItem> heap;
  double total_err = 0.0;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    total_err += leaves[i].err;
    heap.push({ leaves[i].err, i });
  }

  long splits = 0;
  const double min_width = 1e-14 * (std::abs(a) + std::abs(b) + 1.0);
  while (total_err > abs_tol && !heap.empty()) {
    const auto [err, idx] = heap.top();
    heap.pop();
    if (err != leaves[idx].err)
      continue; // stale entry
    if (err <= 0.0 || leaves[idx].b - leaves[idx].a <= min_width)
      break; // cannot improve further
    if (++splits > max_splits) {
      double est = 0.0;
      for (const auto& lf : leaves)
        est += detail::magnitude(lf.fine);
      throw NumericError("adaptive Simpson: split budget exhausted", est,
                         total_err);
    }
    Leaf parent = leaves[idx];
    const double m = 0.5 * (parent.a + parent.b);
    total_err -= parent.err;
    Leaf left = make(parent.a, m, parent.fa, parent.fm);
    Leaf right = make(m, parent.b, parent.fm, parent.fb);
    leaves[idx] = left;
    heap.push({ left.err, idx });
    leaves.push_back(right);
    heap.push({ right.err, leaves.size() - 1 });
    total_err += left.err + right.err;
  }

  // Fixed summation order (by panel position) keeps the result independent
  // of the refinement history.
  std::vector<std::size_t> order(leaves.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return leaves[i].a < leaves[j].a;
  });
  T value{};
  double err_sum = 0.0;
  for (const std::size_t i : order) {
    value += leaves[i].fine + (leaves[i].fine - leaves[i].coarse) / 15.0;
    err_sum += leaves[i].err;
  }
  return { value, err_sum, evals };
}

//! Quadrature of an integrand containing the factor exp(i*freq*x) (or any
//! component oscillating no faster). The initial panelling guarantees at
//! least eight nodes per period, without which the error estimator can
//! alias the oscillation away.
template<class F>
auto oscillatory_simpson(F&& f, double a, double b, double freq,
                         double abs_tol)
  -> Integral<std::decay_t<decltype(f(a))>>
{
  const double max_step = pi / (4.0 * std::max(std::abs(freq), 1e-12));
  const int panels = static_cast<int>(
    std::min(1e6, std::max(1.0, std::ceil((b - a) / max_step))));
  return adaptive_simpson(f, a, b, abs_tol, 100000, panels);
}

//! Integrate f over [a, b] to a relative tolerance: a coarse pass sets the
//! scale, a second pass tightens the absolute tolerance if needed.
template<class F>
auto integrate_to_rel(F&& f, double a, double b, double rel_tol,
                      double abs_floor = 1e-13)
  -> Integral<std::decay_t<decltype(f(a))>>
{
  auto coarse = adaptive_simpson(f, a, b, 1e-6);
  const double scale = detail::magnitude(coarse.value);
  const double tol = std::max(abs_floor, rel_tol * scale);
  if (coarse.error <= tol)
    return coarse;
  return adaptive_simpson(f, a, b, tol);
}

//! Upper bound on the tail integral of a nonincreasing nonnegative envelope
//! phi over [t0, infinity): doubling cells [t, 2t] are bounded by their
//! left value times the width, and once the cell-to-cell ratio settles below
//! one the remainder is closed by a geometric sum. Works for polynomial and
//! exponential tails alike; throws when phi increases or decays too slowly
//! to certify (cell ratio stuck above 0.98).
inline double decreasing_tail_bound(const std::function<double(double)>& phi,
                                    double t0, int max_cells = 2000)
{
  double t = std::max(t0, 1e-6);
  double v = phi(t);
  if (!(v >= 0.0) || !std::isfinite(v))
    throw DomainError("decreasing_tail_bound: envelope not finite at start");
  double sum = 0.0;
  double prev_cell = std::numeric_limits<double>::infinity();
  for (int j = 0; j < max_cells; ++j) {
    const double v_next = phi(2.0 * t);
    if (v_next > v * (1.0 + 1e-12))
      throw DomainError("decreasing_tail_bound: envelope increases past t0");
    const double cell = v * t; // bounds the integral over [t, 2t]
    sum += cell;
    if (cell == 0.0)
      return sum;
    const double ratio = cell / prev_cell;
    if (j > 0 && ratio <= 0.98)
      return sum + cell * ratio / (1.0 - ratio);
    prev_cell = cell;
    t *= 2.0;
    v = v_next;
  }
  throw NumericError("decreasing_tail_bound: envelope decays too slowly", sum,
                     std::numeric_limits<double>::infinity());
}

} // namespace melfun::quad
