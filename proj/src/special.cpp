#include "bdprem/special.hpp"

#include <vector>

namespace bdprem {
namespace {

constexpr long kTableSize = 1L << 16;

const std::vector<double>& factorial_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kTableSize);
    t[0] = 0.0;
    for (long n = 1; n < kTableSize; ++n) t[n] = std::lgamma(static_cast<double>(n) + 1.0);
    return t;
  }();
  return table;
}

}  // namespace

double log_factorial(long n) {
  if (n < 0) return std::numeric_limits<double>::quiet_NaN();
  if (n < kTableSize) return factorial_table()[static_cast<std::size_t>(n)];
  return std::lgamma(static_cast<double>(n) + 1.0);
}

double log_choose(long n, long k) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

}  // namespace bdprem
