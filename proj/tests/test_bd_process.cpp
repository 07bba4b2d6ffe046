#include <doctest.h>

#include <cmath>
#include <vector>

#include "bdprem/bd_process.hpp"
#include "bdprem/random.hpp"

using namespace bdprem;

namespace {

// Plain linear-domain evaluation of the mixture sum in long double, written
// independently of the log-domain code path.
long double direct_pmf(long y, long z, long double lambda) {
  const long double u = lambda / (1.0L + lambda);
  if (z == 0) return y == 0 ? 1.0L : 0.0L;
  if (y == 0) return std::pow(u, static_cast<long double>(z));
  auto choose = [](long n, long k) {
    long double c = 1.0L;
    for (long i = 1; i <= k; ++i) c = c * static_cast<long double>(n - k + i) / static_cast<long double>(i);
    return c;
  };
  long double s = 0.0L;
  for (long j = 1; j <= std::min(y, z); ++j) {
    s += choose(z, j) * choose(y - 1, j - 1) * std::pow(u, static_cast<long double>(z + y - 2 * j)) *
         std::pow(1.0L - u, static_cast<long double>(2 * j));
  }
  return s;
}

}  // namespace

TEST_CASE("upsilon and point values") {
  CHECK(bd_upsilon(1.0) == doctest::Approx(0.5));
  CHECK(bd_upsilon(3.0) == doctest::Approx(0.75));
  // z = 0 is absorbing
  CHECK(bd_pmf(0, {0, 2.0}) == 1.0);
  CHECK(bd_pmf(3, {0, 2.0}) == 0.0);
  CHECK(bd_log_pmf(3, {0, 2.0}) == -std::numeric_limits<double>::infinity());
  // P(0 | z) = upsilon^z
  CHECK(bd_pmf(0, {4, 1.0}) == doctest::Approx(std::pow(0.5, 4)));
}

TEST_CASE("z = 1 reduces to a zero-modified geometric") {
  for (double lambda : {0.1, 0.5, 2.0, 9.0}) {
    const double u = lambda / (1 + lambda);
    CHECK(bd_pmf(0, {1, lambda}) == doctest::Approx(u));
    for (long y = 1; y < 30; ++y) {
      const double expect = (1 - u) * (1 - u) * std::pow(u, y - 1);
      CHECK(bd_pmf(y, {1, lambda}) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("log-domain pmf matches the direct sum") {
  for (long z : {1L, 2L, 5L, 17L, 40L}) {
    for (double lambda : {0.05, 0.5, 1.0, 4.0, 12.0}) {
      for (long y = 0; y <= 80; y += 3) {
        const long double ref = direct_pmf(y, z, lambda);
        if (ref < 1e-280L) continue;
        CHECK(bd_pmf(y, {z, lambda}) ==
              doctest::Approx(static_cast<double>(ref)).epsilon(1e-11));
      }
    }
  }
}

TEST_CASE("large counts stay finite") {
  const double lp = bd_log_pmf(900, {1000, 0.3});
  CHECK(std::isfinite(lp));
  CHECK(lp < 0.0);
  CHECK(std::isfinite(bd_log_pmf(5, {3000, 50.0})));
}

TEST_CASE("log-rate entry point agrees with the checked one") {
  for (double lambda : {1e-4, 0.3, 7.0, 1e3}) {
    CHECK(bd_log_pmf_log_rate(6, 4, std::log(lambda)) ==
          doctest::Approx(bd_log_pmf(6, {4, lambda})).epsilon(1e-13));
  }
}

TEST_CASE("normalisation and moments under the truncation point") {
  for (long z : {0L, 1L, 7L, 30L}) {
    for (double lambda : {0.1, 1.0, 10.0}) {
      const BdParams p{z, lambda};
      double s = 0, m1 = 0, m2 = 0;
      for (long y = 0; y <= bd_truncation_point(p); ++y) {
        const double pr = bd_pmf(y, p);
        s += pr;
        m1 += y * pr;
        m2 += static_cast<double>(y) * y * pr;
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(m1 == doctest::Approx(z).epsilon(1e-9));
      CHECK(m2 - m1 * m1 == doctest::Approx(2 * lambda * z).epsilon(1e-7));
      CHECK(bd_moments(p).variance == doctest::Approx(2 * lambda * z));
    }
  }
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(bd_pmf(1, {-1, 1.0}), std::domain_error);
  CHECK_THROWS_AS(bd_pmf(1, {1, 0.0}), std::domain_error);
  CHECK_THROWS_AS(bd_pmf(1, {1, -2.0}), std::domain_error);
  CHECK_THROWS_AS(bd_pmf(1, {1, std::numeric_limits<double>::infinity()}), std::domain_error);
  CHECK_THROWS_AS(bd_pmf(-1, {1, 1.0}), std::domain_error);
}

TEST_CASE("simulation agrees with the pmf for a small case") {
  Rng rng = make_rng({42});
  const BdParams p{3, 0.8};
  const int n = 200000;
  std::vector<int> counts(200, 0);
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    const long y = bd_simulate(p, rng);
    sum += static_cast<double>(y);
    if (y < 200) ++counts[static_cast<std::size_t>(y)];
  }
  CHECK(sum / n == doctest::Approx(3.0).epsilon(0.02));
  double tv = 0;
  for (long y = 0; y < 200; ++y) tv += std::abs(counts[static_cast<std::size_t>(y)] / double(n) - bd_pmf(y, p));
  CHECK(0.5 * tv < 0.01);
  CHECK(bd_simulate({0, 5.0}, rng) == 0);
}
