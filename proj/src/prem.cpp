#include "bdprem/prem.hpp"

#include <cmath>
#include <stdexcept>

#include "bdprem/error.hpp"

namespace bdprem {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

void require_pd(const Eigen::MatrixXd& d) {
  if (d.rows() != d.cols() || !d.isApprox(d.transpose())) {
    throw std::domain_error("random-effect covariance must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(d);
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("random-effect covariance must be positive definite");
  }
}

}  // namespace

void ModelSpec::validate() const {
  if (p < 0 || q < 0 || r < 1) throw ValidationError("model dimensions must be non-negative, r >= 1");
  std::vector<int> seen(static_cast<std::size_t>(p), 0);
  for (const auto* block : {&fixed_indices, &varying_indices}) {
    for (int k : *block) {
      if (k < 0 || k >= p) throw ValidationError("alpha index out of range in fixed/varying split");
      if (seen[static_cast<std::size_t>(k)]++) {
        throw ValidationError("alpha index appears twice in fixed/varying split");
      }
    }
  }
  for (int s : seen) {
    if (s == 0) throw ValidationError("fixed/varying split does not cover every alpha coefficient");
  }
}

double log_mu(const ObservationDesign& obs, const Eigen::VectorXd& alpha,
              const Eigen::VectorXd& beta_i) {
  require(obs.x.size() == alpha.size(), "log_mu: x and alpha differ in length");
  require(obs.h.size() == beta_i.size(), "log_mu: h and beta differ in length");
  return obs.x.dot(alpha) + obs.h.dot(beta_i);
}

double poisson_log_lik(double z, double log_mu) {
  if (!(z >= 0.0)) throw std::domain_error("Poisson count must be non-negative");
  return z * log_mu - std::exp(log_mu) - std::lgamma(z + 1.0);
}

double unconditional_mean(const ObservationDesign& obs, const Eigen::VectorXd& alpha,
                          const Eigen::MatrixXd& d_beta) {
  require(obs.x.size() == alpha.size(), "unconditional_mean: x and alpha differ in length");
  require(obs.h.size() == d_beta.rows(), "unconditional_mean: h and D differ in size");
  require_pd(d_beta);
  return std::exp(obs.x.dot(alpha) + 0.5 * obs.h.dot(d_beta * obs.h));
}

double marginal_variance(const ObservationDesign& obs, const Eigen::VectorXd& alpha,
                         const Eigen::MatrixXd& d_beta, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::domain_error("birth-death rate must be non-negative and finite");
  }
  const double nu = unconditional_mean(obs, alpha, d_beta);
  return (2.0 * lambda + 1.0) * nu + nu * nu * std::expm1(obs.h.dot(d_beta * obs.h));
}

double marginal_covariance(const ObservationDesign& obs_j, const ObservationDesign& obs_k,
                           const Eigen::VectorXd& alpha, const Eigen::MatrixXd& d_beta) {
  const double nu_j = unconditional_mean(obs_j, alpha, d_beta);
  const double nu_k = unconditional_mean(obs_k, alpha, d_beta);
  return nu_j * nu_k * std::expm1(obs_j.h.dot(d_beta * obs_k.h));
}

double bd_rate(const ObservationDesign& obs, const Eigen::VectorXd& psi,
               std::optional<double> epsilon) {
  require(obs.w.size() == psi.size(), "bd_rate: w and psi differ in length");
  return std::exp(obs.w.dot(psi) + epsilon.value_or(0.0));
}

}  // namespace bdprem
