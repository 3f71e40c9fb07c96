#ifndef STPOISSON_RNG_HPP
#define STPOISSON_RNG_HPP

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace stpoisson {

using Rng = std::mt19937_64;

// splitmix64 step; derives independent, reproducible streams (chains,
// replications, per-time-point runs) from one base seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double draw_normal(Rng& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  return d(rng);
}

inline Eigen::VectorXd draw_std_normal(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = d(rng);
  return z;
}

// Shape-rate parameterization throughout.
inline double draw_gamma(double shape, double rate, Rng& rng) {
  std::gamma_distribution<double> d(shape, 1.0 / rate);
  return d(rng);
}

inline double draw_uniform(Rng& rng) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  return d(rng);
}

inline long draw_poisson(double mean, Rng& rng) {
  std::poisson_distribution<long> d(mean);
  return d(rng);
}

}  // namespace stpoisson

#endif
