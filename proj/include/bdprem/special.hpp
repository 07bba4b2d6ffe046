#pragma once

#include <cmath>
#include <limits>
#include <random>

namespace bdprem {

using Rng = std::mt19937_64;

/// log(n!) for n >= 0. Table lookup below 65536, lgamma above.
double log_factorial(long n);

/// log C(n, k); -inf when k is outside [0, n].
double log_choose(long n, long k);

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Streaming log-sum-exp: one exp per term, rescaling when a new max arrives.
class LogSumExp {
 public:
  void add(double t) {
    if (t == -kInf) return;
    if (t > max_) {
      sum_ = sum_ * std::exp(max_ - t) + 1.0;
      max_ = t;
    } else {
      sum_ += std::exp(t - max_);
    }
  }
  double value() const { return max_ == -kInf ? -kInf : max_ + std::log(sum_); }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();
  double max_ = -kInf;
  double sum_ = 0.0;
};

}  // namespace bdprem
