#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "bdprem/cli.hpp"
#include "bdprem/config.hpp"
#include "bdprem/dataset.hpp"
#include "bdprem/error.hpp"
#include "bdprem/random.hpp"
#include "bdprem/summary.hpp"
#include "bdprem/trace.hpp"

using namespace bdprem;
namespace fs = std::filesystem;

namespace {

DataSchema small_schema() {
  DataSchema s;
  s.alpha_names = {"Intercept", "age", "visit"};
  s.alpha_fixed = {"Intercept", "age"};
  s.w_names = {"Intercept", "visit"};
  return s;
}

const char* kFixture =
    "subject_id,time,y,age,visit\n"
    "a,0,3,1.5,0\n"
    "a,1,0,1.5,1\n"
    "b,0,12,-0.25,0\n";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bdprem_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "bdprem");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  return code;
}

}  // namespace

TEST_CASE("config sections, values and rows") {
  std::istringstream in(
      "# top\n[model]\nkind = bdprem\nalpha = a, b ,c\n\n[alpha]\nx, 0.5, 1.2\ny, 0, d=10\n");
  const auto cfg = ConfigFile::parse(in);
  const auto& m = cfg.section("model");
  CHECK(m.require("kind") == "bdprem");
  CHECK(m.get_list("alpha") == std::vector<std::string>{"a", "b", "c"});
  CHECK(m.get_double("missing", 4.5) == 4.5);
  CHECK(cfg.section("alpha").rows.size() == 2);
  CHECK(cfg.section("alpha").rows[1].fields[2] == "d=10");
  CHECK_THROWS_AS(cfg.section("nope"), ValidationError);
  CHECK_THROWS_AS(m.require("nope"), ValidationError);
  std::istringstream bad("[s]\nn = x\n");
  const auto b = ConfigFile::parse(bad);
  CHECK_THROWS_AS(b.section("s").get_long("n", 0), ValidationError);
}

TEST_CASE("format_double round trips") {
  Rng rng = make_rng({2});
  for (int i = 0; i < 1000; ++i) {
    const double v = draw_normal(rng) * std::pow(10.0, static_cast<int>(draw_normal(rng) * 5));
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(3.0) == "3");
}

TEST_CASE("dataset fixture") {
  std::istringstream in(kFixture);
  const Dataset d = parse_dataset(in, "fixture.csv", small_schema());
  CHECK(d.n_subjects() == 2);
  CHECK(d.n_obs() == 3);
  CHECK(d.subject_begin == std::vector<int>{0, 2, 3});
  CHECK(d.rows[2].y == 12);
  CHECK(d.rows[0].x[0] == 1.0);  // implicit intercept
  CHECK(d.rows[2].x[1] == -0.25);
  CHECK(d.rows[1].w[1] == 1.0);
  const ModelSpec spec = d.model_spec();
  CHECK(spec.fixed_indices == std::vector<int>{0, 1});
  CHECK(spec.varying_indices == std::vector<int>{2});

  std::ostringstream out;
  write_dataset(out, d);
  CHECK(out.str() == kFixture);
}

TEST_CASE("dataset rows are grouped by subject and sorted by time") {
  std::istringstream in(
      "subject_id,time,y,age,visit\n"
      "a,1,0,1.5,1\n"
      "b,0,12,-0.25,0\n"
      "a,0,3,1.5,0\n");
  const Dataset d = parse_dataset(in, "f.csv", small_schema());
  std::ostringstream out;
  write_dataset(out, d);
  CHECK(out.str() == kFixture);
}

TEST_CASE("dataset errors name row and column") {
  auto message = [](const std::string& text, const DataSchema& s) {
    std::istringstream in(text);
    try {
      parse_dataset(in, "f.csv", s);
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  const std::string neg = message("subject_id,time,y,age,visit\na,0,-1,1,0\n", small_schema());
  CHECK(neg.find("f.csv:2") != std::string::npos);
  CHECK(neg.find("'y'") != std::string::npos);
  const std::string nan = message("subject_id,time,y,age,visit\na,0,1,oops,0\n", small_schema());
  CHECK(nan.find("f.csv:2") != std::string::npos);
  CHECK(nan.find("age") != std::string::npos);
  const std::string fixed =
      message("subject_id,time,y,age,visit\na,0,1,1,0\na,1,1,2,1\n", small_schema());
  CHECK(fixed.find("f.csv:3") != std::string::npos);
  CHECK(fixed.find("age") != std::string::npos);
  const std::string missing = message("subject_id,time,y,visit\na,0,1,0\n", small_schema());
  CHECK(missing.find("age") != std::string::npos);
  CHECK_FALSE(message("time,subject_id,y\n1,a,0\n", {}).empty());
}

TEST_CASE("synthetic trial design matches its schema") {
  Rng rng = make_rng({3});
  const Dataset d = trial_design({}, rng);
  CHECK(d.n_subjects() == 173);
  CHECK(d.n_obs() >= 173);
  CHECK(d.n_obs() <= 173 * 5);
  CHECK(d.rows[0].x.size() == 17);
  CHECK(d.rows[0].w.size() == 6);
  CHECK_NOTHROW(d.model_spec());
  for (int i = 0; i < d.n_subjects(); ++i) {
    const auto& head = d.rows[static_cast<std::size_t>(d.subject_begin[static_cast<std::size_t>(i)])];
    CHECK(head.time == 0.0);
    CHECK(head.w[1] == 0.0);  // no post-baseline flag at baseline
  }
  std::ostringstream a;
  write_dataset(a, d);
  std::istringstream in(a.str());
  std::ostringstream b;
  write_dataset(b, parse_dataset(in, "t.csv", trial_schema()));
  CHECK(a.str() == b.str());
}

TEST_CASE("type-7 quantiles") {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(quantile_type7(v, 0.025) == doctest::Approx(3.475));
  CHECK(quantile_type7(v, 0.975) == doctest::Approx(97.525));
  CHECK(quantile_type7(v, 0.0) == 1.0);
  CHECK(quantile_type7(v, 1.0) == 100.0);
  CHECK(quantile_type7({4.0}, 0.3) == 4.0);
}

TEST_CASE("summaries: constant, symmetric and permuted traces") {
  Eigen::MatrixXd s(100, 3);
  Rng rng = make_rng({5});
  for (int i = 0; i < 100; ++i) {
    s(i, 0) = 2.5;
    s(i, 1) = i + 1;
    s(i, 2) = draw_normal(rng) + 3;
  }
  const auto r = summarize_samples({"c", "u", "n"}, s, 0.95);
  CHECK(r[0].mean == 2.5);
  CHECK(r[0].sd == 0.0);
  CHECK(r[0].lo == 2.5);
  CHECK(r[0].hi == 2.5);
  CHECK(r[0].significant);
  CHECK(r[1].lo == doctest::Approx(3.475));
  CHECK(r[1].hi == doctest::Approx(97.525));
  CHECK(r[1].mean - r[1].lo == doctest::Approx(r[1].hi - r[1].mean));

  std::vector<int> perm(100);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::MatrixXd p(100, 3);
  for (int i = 0; i < 100; ++i) p.row(i) = s.row(perm[static_cast<std::size_t>(i)]);
  const auto rp = summarize_samples({"c", "u", "n"}, p, 0.95);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(rp[k].mean == doctest::Approx(r[k].mean).epsilon(1e-14));
    CHECK(rp[k].sd == doctest::Approx(r[k].sd).epsilon(1e-12));
    CHECK(rp[k].lo == r[k].lo);
    CHECK(rp[k].hi == r[k].hi);
  }
  CHECK_THROWS_AS(summarize_samples({"x"}, Eigen::MatrixXd::Ones(1, 1), 0.95), ValidationError);
}

TEST_CASE("MRSE pieces add up and empty bins are blank") {
  Rng rng = make_rng({6});
  std::vector<long> y;
  std::vector<double> z, mu, lambda;
  for (int i = 0; i < 500; ++i) {
    y.push_back(std::poisson_distribution<long>(4.0)(rng));
    z.push_back(4 * draw_uniform(rng) + 0.5);
    mu.push_back(3 * draw_uniform(rng) + 1);
    lambda.push_back(std::exp(2 * draw_normal(rng)));
  }
  const auto rows = mrse_decomposition(y, z, mu, lambda);
  REQUIRE(rows.size() == 3);
  long total = 0;
  for (const auto& r : rows) {
    total += r.m;
    CHECK(std::abs(r.measurement + r.sampling + r.cross - r.mrse) <= 1e-12 * std::max(1.0, r.mrse));
  }
  CHECK(total == 500);

  const auto sparse = mrse_decomposition({1, 2}, {1.0, 2.0}, {1.0, 2.0}, {0.5, 0.6});
  CHECK(sparse[0].m == 0);
  CHECK(sparse[2].m == 0);
  std::ostringstream out;
  write_mrse(out, sparse);
  std::string line;
  std::istringstream lines(out.str());
  std::getline(lines, line);
  std::getline(lines, line);
  CHECK(line.find(",0,,") != std::string::npos);
}

TEST_CASE("prediction follows the lognormal law") {
  Rng rng = make_rng({7});
  Eigen::MatrixXd a(400000, 1);
  for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, 0) = 0.1 * draw_normal(rng);
  ProfileRow p{"g", 0.0, Eigen::VectorXd::Ones(1)};
  const auto r = predict_group_trajectory(a, {p}, 0.95);
  CHECK(r[0].mean == doctest::Approx(std::exp(0.005)).epsilon(1e-3));
  CHECK(r[0].lo == doctest::Approx(std::exp(-0.196)).epsilon(2e-3));
  CHECK(r[0].hi == doctest::Approx(std::exp(0.196)).epsilon(2e-3));

  Eigen::MatrixXd one(1, 1);
  one << 0.3;
  const auto s = predict_group_trajectory(one, {p}, 0.95);
  CHECK(s[0].lo == s[0].hi);
  CHECK(s[0].mean == doctest::Approx(std::exp(0.3)));
}

TEST_CASE("trace directory round trip") {
  Trace t;
  t.alpha_names = {"Intercept", "x"};
  t.psi_names = {"Intercept"};
  t.alpha = Eigen::MatrixXd::Random(4, 2);
  t.psi = Eigen::MatrixXd::Random(4, 1);
  t.dbeta = {0.1, 0.2, 0.3, 1.0 / 3};
  t.z_selected = {0, 2};
  t.z_draws = {{1, 2}, {3, 4}, {5, 6}, {7, 8}};
  t.obs_subject = {"a", "a", "b"};
  t.obs_time = {0, 1, 0};
  t.obs_y = {2, 0, 5};
  t.z_mean = {2.5, 0.25, 5.1};
  t.lambda_mean = {0.1, 0.2, 0.3};
  t.mu_mean = {2, 1, 4};
  t.adapt = {{"eta", 10, 0.4, 0.9}};
  const fs::path dir = scratch("trace");
  write_trace(dir, t);
  const Trace r = read_trace(dir);
  CHECK(r.alpha_names == t.alpha_names);
  CHECK(r.alpha == t.alpha);
  CHECK(r.psi == t.psi);
  CHECK(r.dbeta == t.dbeta);
  CHECK(r.z_selected == t.z_selected);
  CHECK(r.z_draws == t.z_draws);
  CHECK(r.obs_y == t.obs_y);
  CHECK(r.z_mean == t.z_mean);
  CHECK(r.adapt.size() == 1);
  fs::remove_all(dir);
}

TEST_CASE("command line exit codes") {
  std::string out;
  CHECK(cli({"bd-pmf", "--z", "2", "--lambda", "0.5", "--max-y", "3"}, &out) == 0);
  CHECK(out.find("0,0.1111111111111111") != std::string::npos);
  CHECK(cli({"bd-pmf", "--z", "2", "--lambda", "-1", "--max-y", "3"}) == 2);
  CHECK(cli({"bd-pmf", "--z", "x"}) == 2);
  CHECK(cli({"summarize", "--trace-dir", "/nonexistent/dir"}) == 2);
  CHECK(cli({"fit", "--config", "/nonexistent.cfg"}) == 2);
  CHECK(cli({"no-such-command"}) == 2);
}

TEST_CASE("fit from the command line on a small data set") {
  const fs::path dir = scratch("cli_fit");
  {
    std::ofstream d(dir / "data.csv");
    d << "subject_id,time,y,visit\n";
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 3; ++j) d << "s" << i << ',' << j << ',' << (i + j) % 4 << ',' << j << '\n';
    }
    std::ofstream c(dir / "fit.cfg");
    c << "[data]\nfile = data.csv\n[model]\nkind = bdprem\nalpha = Intercept, visit\n"
         "alpha_fixed = Intercept\npsi = Intercept\n"
         "[alpha]\nIntercept, 0, 2\nvisit, 0, 1\n[psi]\nIntercept, 0, 1\n[dbeta]\na = 3\nb = 2\n"
         "[prior]\nmode = table\n[sampler]\niterations = 2000\nburn_in = 500\nthin = 5\nseed = 4\n"
         "[output]\ndir = out\n";
  }
  CHECK(cli({"fit", "--config", (dir / "fit.cfg").string()}) == 0);
  CHECK(fs::exists(dir / "out" / "summary.csv"));
  CHECK(read_trace(dir / "out").samples() == 300);
  CHECK(cli({"mrse", "--trace-dir", (dir / "out").string(), "--data", (dir / "data.csv").string()}) == 0);
  CHECK(cli({"summarize", "--trace-dir", (dir / "out").string()}) == 0);
  fs::remove_all(dir);
}
