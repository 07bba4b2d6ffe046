#pragma once

// Posterior summaries, residual decomposition by reporting-error level and
// group prediction trajectories.

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bdprem/mcmc.hpp"

namespace bdprem {

/// Linear interpolation between order statistics (R's type 7):
/// h = (n - 1) prob, result = x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]).
double quantile_type7(std::vector<double> values, double prob);

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool significant = false;  // interval excludes 0
};

/// One summary per column of `samples` (rows are draws). Needs >= 2 draws.
std::vector<ParameterSummary> summarize_samples(const std::vector<std::string>& names,
                                                const Eigen::MatrixXd& samples, double level);
/// alpha, psi, dbeta (and depsilon) of a trace.
std::vector<ParameterSummary> summarize_trace(const Trace& trace, double level = 0.95);
void write_summary(std::ostream& out, const std::vector<ParameterSummary>& rows, double level);

struct MrseRow {
  double lambda_lo = 0.0;  // bin is [lambda_lo, lambda_hi)
  double lambda_hi = 0.0;
  long m = 0;
  double mrse = 0.0;
  double measurement = 0.0;  // sum (Y - Zbar)^2 / m
  double sampling = 0.0;     // sum (Zbar - mubar)^2 / m
  double cross = 0.0;        // 2 sum (Y - Zbar)(Zbar - mubar) / m
};

/// Bins observations by posterior mean reporting rate. Breaks must be increasing;
/// k breaks give k + 1 bins.
std::vector<MrseRow> mrse_decomposition(const std::vector<long>& y,
                                        const std::vector<double>& z_mean,
                                        const std::vector<double>& mu_mean,
                                        const std::vector<double>& lambda_mean,
                                        const std::vector<double>& breaks = {0.05, 1.0});
std::vector<MrseRow> mrse_decomposition(const Trace& trace,
                                        const std::vector<double>& breaks = {0.05, 1.0});
/// Empty bins are written with m = 0 and blank cells.
void write_mrse(std::ostream& out, const std::vector<MrseRow>& rows);

struct ProfileRow {
  std::string group;
  double month = 0.0;
  Eigen::VectorXd x;  // alpha-ordered covariates
};

struct PredictionRow {
  std::string group;
  double month = 0.0;
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Profile CSV: group,month,<alpha names>; a missing Intercept column means 1.
std::vector<ProfileRow> load_profile(const std::filesystem::path& path,
                                     const std::vector<std::string>& alpha_names);

/// Posterior mean and equal-tailed interval of exp(x'alpha) with beta = 0.
std::vector<PredictionRow> predict_group_trajectory(const Eigen::MatrixXd& alpha_samples,
                                                    const std::vector<ProfileRow>& profile,
                                                    double level = 0.95);
void write_predictions(std::ostream& out, const std::vector<PredictionRow>& rows);

}  // namespace bdprem
