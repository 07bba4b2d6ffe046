#include "bdprem/bd_process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace bdprem {
namespace {

void check_rate(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::domain_error("birth-death rate must be positive and finite, got " +
                            std::to_string(lambda));
  }
}

}  // namespace

void BdParams::validate() const {
  if (z < 0) throw std::domain_error("birth-death initial state must be non-negative");
  check_rate(lambda);
}

double bd_upsilon(double lambda) {
  check_rate(lambda);
  return lambda / (1.0 + lambda);
}

double bd_log_pmf_log_rate(long y, long z, double log_lambda) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (y < 0) return kNegInf;
  if (z == 0) return y == 0 ? 0.0 : kNegInf;

  // log(upsilon) and log(1 - upsilon) straight from log(lambda).
  const double log_ups = -softplus(-log_lambda);
  const double log_comp = -softplus(log_lambda);
  if (y == 0) return static_cast<double>(z) * log_ups;

  const double log_fz = log_factorial(z);
  const double log_fy1 = log_factorial(y - 1);
  const long jmax = std::min(y, z);
  LogSumExp acc;
  for (long j = 1; j <= jmax; ++j) {
    const double log_binoms = log_fz - log_factorial(j) - log_factorial(z - j) + log_fy1 -
                              log_factorial(j - 1) - log_factorial(y - j);
    acc.add(log_binoms + static_cast<double>(z + y - 2 * j) * log_ups +
            static_cast<double>(2 * j) * log_comp);
  }
  return acc.value();
}

double bd_log_pmf(long y, const BdParams& params) {
  params.validate();
  if (y < 0) throw std::domain_error("reported count must be non-negative");
  return bd_log_pmf_log_rate(y, params.z, std::log(params.lambda));
}

double bd_pmf(long y, const BdParams& params) { return std::exp(bd_log_pmf(y, params)); }

BdMoments bd_moments(const BdParams& params) {
  params.validate();
  const auto z = static_cast<double>(params.z);
  return {z, 2.0 * params.lambda * z};
}

long bd_truncation_point(const BdParams& params) {
  params.validate();
  return params.z + static_cast<long>(std::ceil(60.0 * (1.0 + params.lambda)));
}

long bd_simulate(const BdParams& params, Rng& rng) {
  params.validate();
  std::exponential_distribution<double> unit_exp(1.0);
  std::bernoulli_distribution birth(0.5);
  long s = params.z;
  double tau = 0.0;
  while (s > 0) {
    // Total event rate is (birth + death) * s = 2 lambda s.
    tau += unit_exp(rng) / (2.0 * params.lambda * static_cast<double>(s));
    if (tau > 1.0) break;
    s += birth(rng) ? 1 : -1;
  }
  return s;
}

}  // namespace bdprem
