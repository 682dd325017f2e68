#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace melfun {

inline constexpr double pi = 3.141592653589793238462643383279502884;

using cdouble = std::complex<double>;

//! Open interval (lo, hi); used for admissibility constraints on the
//! development point c.
struct Interval
{
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x) const { return x > lo && x < hi; }
};

//! Summation with a fixed reduction tree, so the result depends only on the
//! values and their order, never on chunking or thread count.
inline double pairwise_sum(std::span<const double> xs)
{
  const std::size_t n = xs.size();
  if (n == 0)
    return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (double x : xs)
      s += x;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline double mean(std::span<const double> xs)
{
  return xs.empty() ? 0.0 : pairwise_sum(xs) / static_cast<double>(xs.size());
}

inline double sample_variance(std::span<const double> xs)
{
  const std::size_t n = xs.size();
  if (n < 2)
    return 0.0;
  const double m = mean(xs);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i)
    sq[i] = (xs[i] - m) * (xs[i] - m);
  return pairwise_sum(sq) / static_cast<double>(n - 1);
}

//! Leave-one-out standard error of the mean of xs. For the plain mean this
//! coincides with sd/sqrt(n); kept in jackknife form so other statistics can
//! reuse the same machinery.
inline double jackknife_se_mean(std::span<const double> xs)
{
  const std::size_t n = xs.size();
  if (n < 2)
    return 0.0;
  const double total = pairwise_sum(xs);
  std::vector<double> loo(n);
  for (std::size_t i = 0; i < n; ++i)
    loo[i] = (total - xs[i]) / static_cast<double>(n - 1);
  const double m = mean(loo);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i)
    sq[i] = (loo[i] - m) * (loo[i] - m);
  const double ss = pairwise_sum(sq);
  return std::sqrt(ss * static_cast<double>(n - 1) / static_cast<double>(n));
}

} // namespace melfun
