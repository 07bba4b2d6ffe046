#pragma once

// Equal-rate linear birth-death process observed at unit time.
//
// A population starts at z and each member independently gives birth and
// dies at the same per-capita rate lambda. State 0 is absorbing. The law of
// the state at time 1 is a finite mixture of negative binomials in
// upsilon = lambda / (1 + lambda):
//
//   P(0 | z)     = upsilon^z
//   P(y | z)     = sum_{j=1}^{min(y,z)} C(z,j) C(y-1,j-1)
//                    upsilon^(z+y-2j) (1-upsilon)^(2j),   y >= 1
//
// with E[Y] = z and Var[Y] = 2 lambda z.

#include "bdprem/special.hpp"

namespace bdprem {

struct BdParams {
  long z = 0;           // initial state (true count)
  double lambda = 1.0;  // shared per-capita birth and death rate

  /// Throws std::domain_error unless z >= 0 and lambda is positive and finite.
  void validate() const;
};

double bd_upsilon(double lambda);

double bd_pmf(long y, const BdParams& params);

/// Log-domain pmf; -inf exactly when the transition is impossible (z = 0, y > 0).
double bd_log_pmf(long y, const BdParams& params);

/// Unchecked log pmf parameterised by log(lambda). Used in the sampler's inner
/// loops where the rate comes from a log-linear predictor.
double bd_log_pmf_log_rate(long y, long z, double log_lambda);

struct BdMoments {
  double mean = 0.0;
  double variance = 0.0;
};

BdMoments bd_moments(const BdParams& params);

/// Upper summation limit z + 60 (1 + lambda) for numerical normalisation and
/// moment checks. The tail beyond it is geometric in upsilon and negligible.
long bd_truncation_point(const BdParams& params);

/// Exact event-driven simulation of S(1) given S(0) = z.
long bd_simulate(const BdParams& params, Rng& rng);

}  // namespace bdprem
