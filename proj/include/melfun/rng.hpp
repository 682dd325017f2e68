#pragma once

#include <cmath>
#include <cstdint>

#include "melfun/util.hpp"

namespace melfun {

//! Counter-based generator: each output is a 64-bit mix of key + counter, so
//! streams can be derived by hashing (seed, replication, role) and advanced
//! without shared state. Parallel replications never overlap.
class CounterRng
{
public:
  explicit CounterRng(std::uint64_t key)
    : key_(key)
  {
  }

  //! Stream for one (seed, replication, role) triple.
  static CounterRng derive(std::uint64_t seed, std::uint64_t replication,
                           std::uint64_t role)
  {
    std::uint64_t k = mix(seed);
    k = mix(k ^ (0x9E3779B97F4A7C15ULL + replication));
    k = mix(k ^ (0xD1B54A32D192ED03ULL + role));
    return CounterRng(k);
  }

  std::uint64_t next_u64()
  {
    counter_ += 0x9E3779B97F4A7C15ULL;
    return mix(key_ ^ counter_);
  }

  //! Uniform on the open interval (0, 1); never returns 0 or 1.
  double next_uniform()
  {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  //! Standard normal via the trigonometric Box-Muller transform; consumes
  //! two uniforms per pair, caching the second draw.
  double next_normal()
  {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * pi * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * pi * u2);
  }

  double next_exponential() { return -std::log(next_uniform()); }

private:
  static std::uint64_t mix(std::uint64_t z)
  {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

//! Gamma(shape, rate 1) variate by the Marsaglia-Tsang squeeze; shapes below
//! one go through the boosting identity Gamma(a) = Gamma(a+1) U^{1/a}.
inline double sample_gamma(CounterRng& rng, double shape)
{
  if (shape < 1.0) {
    const double u = rng.next_uniform();
    return sample_gamma(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double z, v;
    do {
      z = rng.next_normal();
      v = 1.0 + c * z;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.next_uniform();
    if (u < 1.0 - 0.0331 * z * z * z * z)
      return d * v;
    if (std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v)))
      return d * v;
  }
}

} // namespace melfun
