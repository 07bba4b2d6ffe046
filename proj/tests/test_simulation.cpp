#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "bdprem/error.hpp"
#include "bdprem/random.hpp"
#include "bdprem/simulation.hpp"

using namespace bdprem;

namespace {

SimulationTruth small_truth(Generator g) {
  SimulationTruth t;
  t.alpha_true = Eigen::VectorXd::Zero(17);
  t.alpha_true[0] = 0.5;
  t.alpha_true[3] = 0.3;
  t.psi_true = Eigen::VectorXd::Zero(6);
  t.psi_true[0] = -0.5;
  t.d_beta_true = 0.5;
  t.generator = g;
  t.n_subjects = 30;
  return t;
}

std::vector<ReplicateFit> random_fits(int reps, Rng& rng) {
  std::vector<ReplicateFit> fits;
  for (const char* model : {"a", "b"}) {
    for (int r = 0; r < reps; ++r) {
      ReplicateFit f;
      f.replicate = r;
      f.model = model;
      f.names = {"x", "y"};
      f.mean = Eigen::Vector2d(1 + 0.3 * draw_normal(rng), -2 + draw_normal(rng));
      f.var = Eigen::Vector2d(0.1, 0.2);
      f.lo = f.mean.array() - 0.6;
      f.hi = f.mean.array() + 0.6;
      fits.push_back(f);
    }
  }
  return fits;
}

}  // namespace

TEST_CASE("PREM generator reports the true counts") {
  Rng rng = make_rng({1});
  TrialDesignOptions opt;
  opt.n_subjects = 30;
  const Dataset design = trial_design(opt, rng);
  const auto g = generate_dataset(small_truth(Generator::Prem), design, rng);
  for (std::size_t o = 0; o < g.z.size(); ++o) CHECK(g.data.rows[o].y == g.z[o]);
  CHECK(g.beta.size() == 30);
}

TEST_CASE("generator moments match the model") {
  // intercept-only design: E[Y] = exp(a + D/2) under both generators
  Rng rng = make_rng({2});
  TrialDesignOptions opt;
  opt.n_subjects = 4000;
  opt.p_casual = 0.0;
  opt.p_trade = 0.0;
  opt.p_idu = 0.0;
  opt.p_msm = 0.0;
  opt.retention = 0.0;
  const Dataset design = trial_design(opt, rng);
  for (Generator gen : {Generator::BdPrem, Generator::Prem}) {
    auto truth = small_truth(gen);
    truth.alpha_true[3] = 0.0;
    truth.n_subjects = opt.n_subjects;
    double sy = 0, sy2 = 0;
    const int reps = 10;
    for (int r = 0; r < reps; ++r) {
      const auto g = generate_dataset(truth, design, rng);
      for (const auto& row : g.data.rows) {
        sy += static_cast<double>(row.y);
        sy2 += static_cast<double>(row.y * row.y);
      }
    }
    const double n = reps * 4000.0;
    const double nu = std::exp(0.5 + 0.25);
    const double lam = gen == Generator::BdPrem ? std::exp(-0.5) : 0.0;
    const double var = (2 * lam + 1) * nu + nu * nu * (std::exp(0.5) - 1);
    const double m = sy / n;
    CHECK(std::abs(m - nu) < 4 * std::sqrt(var / n));
    CHECK(sy2 / n - m * m == doctest::Approx(var).epsilon(0.06));
  }
}

TEST_CASE("study table: MSE = bias^2 + variance") {
  Rng rng = make_rng({3});
  const auto fits = random_fits(10, rng);
  const auto rows = aggregate_report(fits, {{"x", 1.0}, {"y", -1.5}});
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK(std::abs(r.mse - (r.bias * r.bias + r.var)) <= 1e-12 * std::max(1.0, r.mse));
    CHECK(r.avg_var > 0);
    CHECK(r.coverage >= 0);
    CHECK(r.coverage <= 1);
    CHECK(std::isfinite(r.bias_t));
  }
}

TEST_CASE("study table with one replicate") {
  Rng rng = make_rng({4});
  const auto rows = aggregate_report(random_fits(1, rng), {{"x", 1.0}});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].var == 0.0);
  CHECK(std::isnan(rows[0].bias_t));
  CHECK(rows[0].mse == doctest::Approx(rows[0].bias * rows[0].bias));
}

TEST_CASE("study table ignores replicate order") {
  Rng rng = make_rng({5});
  auto fits = random_fits(7, rng);
  const auto a = aggregate_report(fits, {{"x", 1.0}, {"y", -1.5}});
  std::shuffle(fits.begin(), fits.end(), rng);
  const auto b = aggregate_report(fits, {{"x", 1.0}, {"y", -1.5}});
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].parameter == b[k].parameter);
    CHECK(a[k].model == b[k].model);
    CHECK(a[k].bias == doctest::Approx(b[k].bias).epsilon(1e-14));
    CHECK(a[k].var == doctest::Approx(b[k].var).epsilon(1e-12));
    CHECK(a[k].coverage == b[k].coverage);
  }
}

TEST_CASE("truth validation") {
  auto t = small_truth(Generator::BdPrem);
  t.d_beta_true = -1;
  CHECK_THROWS_AS(t.validate(), ValidationError);
  t = small_truth(Generator::BdPrem);
  t.replicates = 0;
  CHECK_THROWS_AS(t.validate(), ValidationError);
}

TEST_CASE("a short study runs end to end and is reproducible") {
  Rng rng = make_rng({6});
  TrialDesignOptions opt;
  opt.n_subjects = 30;
  const Dataset design = trial_design(opt, rng);
  auto truth = small_truth(Generator::BdPrem);
  truth.replicates = 2;
  const auto names = design.schema.alpha_names;
  PriorSpec prior = make_independent_prior(names, std::vector<double>(17, 0.0), std::vector<double>(17, 2.0),
                                           design.schema.w_names, std::vector<double>(6, 0.0),
                                           std::vector<double>(6, 2.0), {3, 2});
  FitSpec f;
  f.label = "bdprem";
  f.prior = prior;
  f.sampler.iterations = 3000;
  f.sampler.burn_in = 1000;
  f.sampler.thin = 10;
  FitSpec p = f;
  p.label = "prem";
  p.kind = ModelKind::Prem;
  StudyOptions o;
  o.seed = 11;
  o.threads = 2;
  const auto a = replicate_study(truth, design, {f, p}, o);
  o.threads = 1;
  const auto b = replicate_study(truth, design, {f, p}, o);
  CHECK(a.fits.size() == 4);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t k = 0; k < a.rows.size(); ++k) CHECK(a.rows[k].bias == b.rows[k].bias);
  const auto psi_rows = std::count_if(a.rows.begin(), a.rows.end(), [](const StudyRow& r) {
    return r.parameter.rfind("psi:", 0) == 0;
  });
  CHECK(psi_rows == 6);  // prem has no psi
}
