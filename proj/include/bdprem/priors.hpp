#pragma once

// Prior construction: point-and-range elicitation, data-augmentation prior
// data, and priors carried over from the posterior of a previous data set.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bdprem/config.hpp"
#include "bdprem/special.hpp"

namespace bdprem {

struct InverseGamma {
  double shape = 3.0;  // a
  double scale = 2.0;  // b

  double mean() const { return scale / (shape - 1.0); }
  double log_density(double x) const;
};

struct PriorSpec {
  std::vector<std::string> alpha_names;
  Eigen::VectorXd m_alpha;
  Eigen::MatrixXd sigma_alpha;
  std::vector<std::string> psi_names;
  Eigen::VectorXd m_psi;
  Eigen::MatrixXd sigma_psi;
  InverseGamma d_beta;
  std::optional<InverseGamma> d_epsilon;

  /// Symmetric positive definite covariances, proper inverse-gamma terms.
  /// Throws ValidationError.
  void validate() const;
};

/// Independent normal prior from per-coefficient (mean, sd) tables.
PriorSpec make_independent_prior(std::vector<std::string> alpha_names,
                                 const std::vector<double>& alpha_mean,
                                 const std::vector<double>& alpha_sd,
                                 std::vector<std::string> psi_names,
                                 const std::vector<double>& psi_mean,
                                 const std::vector<double>& psi_sd, InverseGamma d_beta);

/// Prior SD that puts exp(m + 1.96 sd) = d, i.e. d sits on the edge of a 95% interval.
double point_range_sd(double m, double d);

// --- data-augmentation prior -------------------------------------------------

struct DaPremRow {
  double z0 = 0.0;  // may be fractional
  Eigen::VectorXd x0;
};

struct DaBdRow {
  long y0 = 0;
  long z0 = 0;
  Eigen::VectorXd w0;
};

struct DaPriorData {
  std::vector<DaPremRow> prem_rows;
  std::vector<DaBdRow> bd_rows;
};

/// Log density of the data-augmentation prior (up to its normalising constant):
/// Poisson likelihood of the PREM rows at x0'alpha + beta0_k, the N(0, d_beta)
/// density of the nuisance beta0 vector, the IG pre-prior on d_beta, and the
/// birth-death likelihood of the BD rows at rate exp(w0'psi).
double da_log_prior(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta0, double d_beta,
                    const Eigen::VectorXd& psi, const DaPriorData& data,
                    const InverseGamma& pre_prior);

struct DaSummaryOptions {
  long iterations = 200000;
  long burn_in = 20000;
  long thin = 5;
  std::uint64_t seed = 20240601;
  // Vague N(0, sd^2) pre-prior on psi. A BD row with y0 == z0 leaves its rate
  // direction flat as lambda -> 0, so the psi part needs this to stay proper.
  // Set to 0 to disable.
  double psi_pre_prior_sd = 10.0;
};

/// Runs an MCMC on the prior-data-only posterior and returns independent normal
/// priors with the sampled means/SDs, plus a moment-matched IG for D_beta.
PriorSpec summarize_da_prior(const DaPriorData& data, const InverseGamma& pre_prior,
                             std::vector<std::string> alpha_names,
                             std::vector<std::string> psi_names,
                             const DaSummaryOptions& options = {});

/// Loads DA prior data. The PREM file has columns z0 then one column per alpha
/// name; the BD file has y0, z0 then one column per psi name.
DaPriorData load_da_prior_data(const std::string& prem_csv, const std::string& bd_csv,
                               const std::vector<std::string>& alpha_names,
                               const std::vector<std::string>& psi_names);

// --- previous data set ---------------------------------------------------------

struct NormalPrior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// (mean, g * cov): a previous posterior inflated by g.
NormalPrior ds_prior_from_posterior(const Eigen::VectorXd& post_mean,
                                    const Eigen::MatrixXd& post_cov, double g);

/// Joint prior of (A + D/2, A - D/2) for A ~ N(avg_mean, avg_cov) and an
/// independent difference D ~ N(0, S) where S is compound symmetric with
/// variance diff_sd^2 and correlation diff_corr.
NormalPrior split_average_difference_prior(const Eigen::VectorXd& avg_mean,
                                           const Eigen::MatrixXd& avg_cov, double diff_sd,
                                           double diff_corr);

/// IG(a, b) worth n_equiv_obs observations at obs_per_subject each, with mean d_bar.
InverseGamma ig_from_equivalent_sample(double n_equiv_obs, double obs_per_subject,
                                       double d_bar);

struct SplitGroup {
  std::vector<std::string> previous;  // coefficients in the previous model (average)
  std::vector<std::string> first;     // new coefficients = average + difference / 2
  std::vector<std::string> second;    // new coefficients = average - difference / 2
  double diff_sd = 1.175;
  double diff_corr = 0.5;
};

/// General previous-data-set prior: coefficients copied by name, split groups
/// expanded as in split_average_difference_prior, previous covariance inflated by g.
NormalPrior assemble_ds_prior(const std::vector<std::string>& previous_names,
                              const Eigen::VectorXd& previous_mean,
                              const Eigen::MatrixXd& previous_cov, double g,
                              const std::vector<std::string>& new_names,
                              const std::vector<SplitGroup>& splits);

/// Parses "a b c -> d e f | g h i".
SplitGroup parse_split_group(const std::string& text, double diff_sd, double diff_corr);

/// Prior tables from [alpha], [psi], [dbeta] (and optional [depsilon]) sections.
/// Rows are "name, mean, sd" or "name, mean, d=<range>" for point-and-range entry.
PriorSpec parse_prior_tables(const ConfigFile& cfg, const std::vector<std::string>& alpha_names,
                             const std::vector<std::string>& psi_names);

}  // namespace bdprem
