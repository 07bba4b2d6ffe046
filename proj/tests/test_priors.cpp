#include <doctest.h>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

#include "bdprem/error.hpp"
#include "bdprem/priors.hpp"
#include "bdprem/random.hpp"

using namespace bdprem;

namespace {

Eigen::MatrixXd random_spd(Rng& rng, Eigen::Index k) {
  Eigen::MatrixXd a(k, k);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = draw_normal(rng);
  return a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(k, k);
}

bool is_pd(const Eigen::MatrixXd& m) { return Eigen::LLT<Eigen::MatrixXd>(m).info() == Eigen::Success; }

}  // namespace

TEST_CASE("point-and-range standard deviations") {
  CHECK(point_range_sd(0, 80) == doctest::Approx(2.2360).epsilon(0.0002));
  CHECK(point_range_sd(0, 10) == doctest::Approx(1.1747).epsilon(0.0004));
  CHECK(point_range_sd(0.5, std::exp(0.5 + 1.96)) == doctest::Approx(1.0));
  CHECK_THROWS_AS(point_range_sd(0, 1), std::domain_error);
  CHECK_THROWS_AS(point_range_sd(1, 2), std::domain_error);
}

TEST_CASE("inverse gamma from an equivalent sample") {
  const auto ig = ig_from_equivalent_sample(30, 5, 0.2745);
  CHECK(ig.shape == doctest::Approx(3.0));
  CHECK(ig.scale == doctest::Approx(0.549));
  CHECK(ig.mean() == doctest::Approx(0.2745));
  CHECK_THROWS_AS(ig_from_equivalent_sample(10, 5, 0.3), std::domain_error);
  CHECK_THROWS_AS(ig_from_equivalent_sample(30, 5, 0), std::domain_error);
  // log density integrates to one
  InverseGamma g{3, 2};
  double s = 0;
  const double h = 1e-3;
  for (double x = h / 2; x < 400; x += h) s += std::exp(g.log_density(x)) * h;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("average/difference split prior") {
  Rng rng = make_rng({3});
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::Index k = 1 + rep % 4;
    const Eigen::MatrixXd sigma = random_spd(rng, k);
    const Eigen::VectorXd m = Eigen::VectorXd::Random(k);
    const double sd = 0.2 + rep * 0.05, corr = (rep % 10) / 10.0;
    const NormalPrior p = split_average_difference_prior(m, sigma, sd, corr);
    CHECK(is_pd(p.cov));

    // independent construction: (A + D/2, A - D/2) = M (A, D)
    Eigen::MatrixXd s = sd * sd * ((1 - corr) * Eigen::MatrixXd::Identity(k, k) +
                                   corr * Eigen::MatrixXd::Ones(k, k));
    Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(2 * k, 2 * k);
    joint.topLeftCorner(k, k) = sigma;
    joint.bottomRightCorner(k, k) = s;
    Eigen::MatrixXd mm(2 * k, 2 * k);
    mm << Eigen::MatrixXd::Identity(k, k), 0.5 * Eigen::MatrixXd::Identity(k, k),
        Eigen::MatrixXd::Identity(k, k), -0.5 * Eigen::MatrixXd::Identity(k, k);
    CHECK((p.cov - mm * joint * mm.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((p.mean.head(k) - m).norm() == 0.0);
    CHECK((p.mean.tail(k) - m).norm() == 0.0);
  }
  CHECK_THROWS_AS(split_average_difference_prior(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1), 0, 0.5),
                  std::domain_error);
  CHECK_THROWS_AS(split_average_difference_prior(Eigen::VectorXd::Zero(1), -Eigen::MatrixXd::Identity(1, 1), 1, 0.5),
                  std::domain_error);
}

TEST_CASE("previous-data-set prior with inflation and splitting") {
  Rng rng = make_rng({5});
  const Eigen::MatrixXd sigma = random_spd(rng, 3);
  Eigen::VectorXd m(3);
  m << 0.1, -0.2, 0.3;
  const auto inflated = ds_prior_from_posterior(m, sigma, 4.0);
  CHECK((inflated.cov - 4.0 * sigma).norm() < 1e-12);
  CHECK_THROWS_AS(ds_prior_from_posterior(m, sigma, 0.0), std::domain_error);

  const std::vector<std::string> prev{"a", "b", "c"};
  const std::vector<std::string> next{"c", "b1", "a", "b2"};
  const auto split = parse_split_group("b -> b1 | b2", 1.175, 0.5);
  CHECK(split.previous == std::vector<std::string>{"b"});
  const NormalPrior p = assemble_ds_prior(prev, m, sigma, 2.0, next, {split});
  CHECK(p.mean[0] == doctest::Approx(0.3));
  CHECK(p.mean[1] == doctest::Approx(-0.2));
  CHECK(p.mean[3] == doctest::Approx(-0.2));
  const double vb = 2.0 * sigma(1, 1), dd = 1.175 * 1.175;
  CHECK(p.cov(1, 1) == doctest::Approx(vb + dd / 4));
  CHECK(p.cov(1, 3) == doctest::Approx(vb - dd / 4));
  CHECK(p.cov(0, 2) == doctest::Approx(2.0 * sigma(2, 0)));
  CHECK(is_pd(p.cov));
  CHECK_THROWS_AS(assemble_ds_prior(prev, m, sigma, 2.0, {"zz"}, {}), ValidationError);
  CHECK_THROWS_AS(parse_split_group("a b -> c | d", 1, 0.5), ValidationError);
}

TEST_CASE("prior tables from a configuration") {
  std::istringstream in(R"(
[alpha]
Intercept, 0, 1.74
IDU, 0.78, d=20
[psi]
Intercept, 0, 2.24
[dbeta]
a = 3
b = 2
)");
  const auto cfg = ConfigFile::parse(in, "prior");
  const PriorSpec p = parse_prior_tables(cfg, {"Intercept", "IDU"}, {"Intercept"});
  CHECK(p.sigma_alpha(0, 0) == doctest::Approx(1.74 * 1.74));
  CHECK(std::sqrt(p.sigma_alpha(1, 1)) == doctest::Approx((std::log(20.0) - 0.78) / 1.96));
  CHECK(p.d_beta.mean() == doctest::Approx(1.0));
  CHECK_THROWS_AS(parse_prior_tables(cfg, {"Intercept", "IDU", "MSM"}, {"Intercept"}), ValidationError);
  CHECK_THROWS_AS(parse_prior_tables(cfg, {"Intercept"}, {"Intercept"}), ValidationError);

  std::istringstream bad(R"(
[alpha]
Intercept, 0, -1
[dbeta]
a = 3
b = 2
)");
  CHECK_THROWS_AS(parse_prior_tables(ConfigFile::parse(bad, "bad"), {"Intercept"}, {}), ValidationError);
}

TEST_CASE("prior validation rejects improper pieces") {
  PriorSpec p = make_independent_prior({"a"}, {0}, {1}, {"b"}, {0}, {1}, {3, 2});
  CHECK_NOTHROW(p.validate());
  p.d_beta.shape = 0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p.d_beta.shape = 3;
  p.sigma_psi(0, 0) = -1;
  CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("summarised data-augmentation prior matches the digamma oracle") {
  // With a flat alpha and a square invertible X0, eta_k | prior data is
  // log Gamma(z_k, 1) independently, so E[alpha] = X0^-1 digamma(z) and
  // Var(alpha) = X0^-1 (diag trigamma(z) + E[D] I) X0^-T, while D keeps its
  // IG(a, b) pre-prior.
  DaPriorData data;
  const double z[3] = {1.0, 3.0, 0.5};
  Eigen::MatrixXd x(3, 3);
  x << 1, 0, 0, 1, 1, 0, 1, 0, 1;
  for (int k = 0; k < 3; ++k) data.prem_rows.push_back({z[k], x.row(k).transpose()});
  data.bd_rows.push_back({3, 2, Eigen::VectorXd::Ones(1)});

  DaSummaryOptions opt;
  opt.iterations = 300000;
  opt.burn_in = 20000;
  opt.thin = 5;
  opt.seed = 11;
  const InverseGamma pre{4, 3};  // mean 1, variance 0.5
  const PriorSpec p = summarize_da_prior(data, pre, {"a0", "a1", "a2"}, {"psi0"}, opt);

  Eigen::VectorXd dg(3), tg(3);
  for (int k = 0; k < 3; ++k) {
    dg[k] = boost::math::digamma(z[k]);
    tg[k] = boost::math::trigamma(z[k]);
  }
  const Eigen::MatrixXd xi = x.inverse();
  const Eigen::VectorXd mean = xi * dg;
  const Eigen::MatrixXd cov = xi * (Eigen::MatrixXd(tg.asDiagonal()) + pre.mean() * Eigen::MatrixXd::Identity(3, 3)) * xi.transpose();
  for (int k = 0; k < 3; ++k) {
    CHECK(std::abs(p.m_alpha[k] - mean[k]) < 0.08);
    CHECK(std::sqrt(p.sigma_alpha(k, k)) == doctest::Approx(std::sqrt(cov(k, k))).epsilon(0.05));
  }
  CHECK(p.d_beta.mean() == doctest::Approx(1.0).epsilon(0.05));
  CHECK(std::isfinite(p.m_psi[0]));
  CHECK(p.sigma_psi(0, 0) > 0);
}

TEST_CASE("data-augmentation prior density is integrable") {
  // One alpha, one psi: integrate over (alpha, beta0, D, psi) by importance
  // sampling from a wide normal; the estimate must be stable across seeds.
  DaPriorData data;
  data.prem_rows.push_back({2.0, Eigen::VectorXd::Ones(1)});
  data.bd_rows.push_back({3, 2, Eigen::VectorXd::Ones(1)});
  const InverseGamma pre{3, 2};
  auto estimate = [&](std::uint64_t seed) {
    Rng rng = make_rng({seed});
    const int n = 400000;
    const double sa = 3, sb = 2, sl = 1.5, sp = 3;
    double acc = 0;
    for (int i = 0; i < n; ++i) {
      const double a = sa * draw_normal(rng), b = sb * draw_normal(rng);
      const double ld = sl * draw_normal(rng), ps = sp * draw_normal(rng);
      auto lnorm = [](double v, double s) { return -0.5 * v * v / (s * s) - std::log(s * std::sqrt(2 * std::numbers::pi)); };
      const double log_q = lnorm(a, sa) + lnorm(b, sb) + lnorm(ld, sl) + lnorm(ps, sp) - ld;  // D = exp(ld)
      const double lp = da_log_prior(Eigen::VectorXd::Constant(1, a), Eigen::VectorXd::Constant(1, b),
                                     std::exp(ld), Eigen::VectorXd::Constant(1, ps), data, pre);
      acc += std::exp(lp - log_q);
    }
    return acc / n;
  };
  const double z1 = estimate(1), z2 = estimate(2), z3 = estimate(3);
  CHECK(std::isfinite(z1));
  CHECK(z1 > 0);
  CHECK(std::abs(z2 / z1 - 1) < 0.1);
  CHECK(std::abs(z3 / z1 - 1) < 0.1);
}

TEST_CASE("DA summary rejects under-identified prior data") {
  DaPriorData data;
  data.prem_rows.push_back({1.0, Eigen::VectorXd::Ones(2)});
  data.prem_rows.push_back({2.0, Eigen::VectorXd::Ones(2)});
  data.bd_rows.push_back({3, 2, Eigen::VectorXd::Ones(1)});
  CHECK_THROWS_AS(summarize_da_prior(data, {}, {"a", "b"}, {"p"}), ValidationError);
}
