#pragma once

// Poisson random-effects layer and the log-linear birth-death rate model.

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace bdprem {

struct ObservationDesign {
  Eigen::VectorXd x;  // fixed-effect covariates (length p)
  Eigen::VectorXd h;  // random-effect covariates (length r)
  Eigen::VectorXd w;  // rate-model covariates (length q)
  double time = 0.0;
  int subject_index = 0;
  long y = 0;  // reported count
};

struct ModelSpec {
  int p = 0;
  int r = 1;
  int q = 0;
  std::vector<int> fixed_indices;    // alpha^(F): constant within subject
  std::vector<int> varying_indices;  // alpha^(V)
  bool use_rate_random_effect = false;

  /// Checks that the fixed/varying split partitions 0..p-1. Throws ValidationError.
  void validate() const;
};

/// x'alpha + h'beta_i
double log_mu(const ObservationDesign& obs, const Eigen::VectorXd& alpha,
              const Eigen::VectorXd& beta_i);

/// z log(mu) - mu - log Gamma(z + 1). z may be fractional (data-augmentation counts).
double poisson_log_lik(double z, double log_mu);

/// nu = exp(x'alpha + h'D h / 2), the mean of Z with the random effect integrated out.
double unconditional_mean(const ObservationDesign& obs, const Eigen::VectorXd& alpha,
                          const Eigen::MatrixXd& d_beta);

/// Var(Y) = (2 lambda + 1) nu + nu^2 (exp(h'D h) - 1)
double marginal_variance(const ObservationDesign& obs, const Eigen::VectorXd& alpha,
                         const Eigen::MatrixXd& d_beta, double lambda);

/// Cov(Y_j, Y_k) = nu_j nu_k (exp(h_j'D h_k) - 1) for two rows of one subject.
double marginal_covariance(const ObservationDesign& obs_j, const ObservationDesign& obs_k,
                           const Eigen::VectorXd& alpha, const Eigen::MatrixXd& d_beta);

/// exp(w'psi [+ epsilon_i])
double bd_rate(const ObservationDesign& obs, const Eigen::VectorXd& psi,
               std::optional<double> epsilon = std::nullopt);

}  // namespace bdprem
