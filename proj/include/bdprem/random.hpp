#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Dense>

#include "bdprem/special.hpp"

namespace bdprem {

/// Engine seeded from several integers through std::seed_seq, so (seed, replicate,
/// fit) triples give independent, reproducible streams.
Rng make_rng(std::initializer_list<std::uint64_t> keys);

inline double draw_uniform(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double draw_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

/// Gamma(shape, rate) with density x^(k-1) rate^k exp(-rate x) / Gamma(k).
inline double draw_gamma_rate(Rng& rng, double shape, double rate) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

inline Eigen::VectorXd draw_normal_vector(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = draw_normal(rng);
  return v;
}

/// Metropolis accept step on a log ratio.
inline bool accept_log_ratio(Rng& rng, double log_ratio) {
  if (log_ratio >= 0.0) return true;
  return std::log(draw_uniform(rng)) < log_ratio;
}

}  // namespace bdprem
