#pragma once

// Small hand-built models shared by the sampler tests.

#include <algorithm>
#include <cmath>
#include <vector>

#include "bdprem/mcmc.hpp"
#include "bdprem/priors.hpp"

namespace toy {

struct Model {
  std::vector<bdprem::ObservationDesign> rows;
  std::vector<int> begin;
  bdprem::ModelSpec spec;
  bdprem::PriorSpec prior;
};

// n subjects with m visits each. Columns: intercept (fixed) and, when
// with_slope, a visit-varying covariate. Rate model: intercept only.
inline Model grid(int n, int m, bool with_slope, double prior_sd = 10.0) {
  Model t;
  for (int i = 0; i < n; ++i) {
    t.begin.push_back(static_cast<int>(t.rows.size()));
    for (int j = 0; j < m; ++j) {
      bdprem::ObservationDesign o;
      o.x = with_slope ? Eigen::VectorXd(Eigen::Vector2d(1.0, -1.0 + 2.0 * j / std::max(1, m - 1) + 0.1 * (i % 3)))
                       : Eigen::VectorXd(Eigen::VectorXd::Ones(1));
      o.h = Eigen::VectorXd::Ones(1);
      o.w = Eigen::VectorXd::Ones(1);
      o.time = j;
      o.subject_index = i;
      t.rows.push_back(o);
    }
  }
  t.begin.push_back(static_cast<int>(t.rows.size()));
  t.spec.p = with_slope ? 2 : 1;
  t.spec.q = 1;
  t.spec.fixed_indices = {0};
  if (with_slope) t.spec.varying_indices = {1};
  std::vector<std::string> names{"Intercept"};
  std::vector<double> zero{0.0}, sd{prior_sd};
  if (with_slope) {
    names.push_back("x");
    zero.push_back(0.0);
    sd.push_back(prior_sd);
  }
  t.prior = bdprem::make_independent_prior(names, zero, sd, {"Intercept"}, {0.0}, {prior_sd}, {3, 2});
  return t;
}

inline bdprem::SamplerConfig config(long iterations = 1000, long burn_in = 0, long thin = 1,
                                    std::uint64_t seed = 1) {
  bdprem::SamplerConfig c;
  c.iterations = iterations;
  c.burn_in = burn_in;
  c.thin = thin;
  c.seed = seed;
  return c;
}

inline bdprem::Sampler sampler(const Model& t, const bdprem::SamplerConfig& c = config(),
                               bdprem::ModelKind kind = bdprem::ModelKind::BdPrem) {
  return bdprem::Sampler(t.rows, t.begin, t.spec, t.prior, c, kind);
}

/// Kolmogorov distance between draws and a density tabulated on a grid.
inline double ks_against_grid(std::vector<double> draws, const std::vector<double>& grid,
                              const std::vector<double>& log_density) {
  std::sort(draws.begin(), draws.end());
  std::vector<double> cdf(grid.size(), 0.0);
  const double mx = *std::max_element(log_density.begin(), log_density.end());
  double acc = 0.0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    acc += 0.5 * (std::exp(log_density[k] - mx) + std::exp(log_density[k - 1] - mx)) *
           (grid[k] - grid[k - 1]);
    cdf[k] = acc;
  }
  for (double& c : cdf) c /= acc;
  double ks = 0.0;
  const double n = static_cast<double>(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const auto it = std::lower_bound(grid.begin(), grid.end(), draws[i]);
    double f = 0.0;
    if (it == grid.end()) {
      f = 1.0;
    } else if (it != grid.begin()) {
      const auto k = static_cast<std::size_t>(it - grid.begin());
      const double w = (draws[i] - grid[k - 1]) / (grid[k] - grid[k - 1]);
      f = cdf[k - 1] + w * (cdf[k] - cdf[k - 1]);
    }
    ks = std::max({ks, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
  }
  return ks;
}

}  // namespace toy
