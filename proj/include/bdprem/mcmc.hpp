#pragma once

// Random-scan Metropolis-within-Gibbs sampler for the birth-death reporting
// model layered over a Poisson random-intercept model.
//
// Blocks: eta (centred random intercepts), Z (latent true counts), alpha^(V),
// D_beta, alpha^(F) (conjugate), psi (rate coefficients) and, when enabled,
// the rate random effect epsilon together with D_epsilon.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "bdprem/adaptive.hpp"
#include "bdprem/dataset.hpp"
#include "bdprem/priors.hpp"
#include "bdprem/prem.hpp"
#include "bdprem/special.hpp"

namespace bdprem {

enum class Block { Eta, Z, AlphaV, DBeta, AlphaF, Psi, RateEffect };
inline constexpr std::array<Block, 7> kAllBlocks{Block::Eta,    Block::Z,   Block::AlphaV,
                                                 Block::DBeta,  Block::AlphaF, Block::Psi,
                                                 Block::RateEffect};
const char* block_name(Block b);
Block parse_block(const std::string& name);

// Prem fixes Z = Y and drops the reporting layer.
enum class ModelKind { BdPrem, Prem };

struct SamplerConfig {
  long iterations = 110000;
  long burn_in = 10000;
  long thin = 10;
  std::map<Block, double> scan;  // empty: defaults
  std::uint64_t seed = 1;
  double target_scalar = 0.4;  // eta, epsilon
  double target_vector = 0.25;  // alpha^(V), psi
  double initial_kappa = 1.0;
  TTransform t_transform = TTransform::Sqrt;
  bool freeze_after_burn_in = false;
  std::vector<int> z_selected;  // observation indices whose Z draws are kept

  /// Default scan probabilities restricted to the active blocks and renormalised.
  static std::map<Block, double> default_scan(const std::vector<Block>& active);
};

struct ChainState {
  std::vector<long> z;
  Eigen::VectorXd eta;
  Eigen::VectorXd alpha;  // full alpha, coefficient order
  Eigen::VectorXd psi;
  Eigen::VectorXd epsilon;  // empty unless the rate random effect is on
  double d_beta = 1.0;
  double d_epsilon = 1.0;

  /// beta_i = eta_i - x^(F)_{i1}' alpha^(F)
  Eigen::VectorXd beta(const std::vector<ObservationDesign>& rows,
                       const std::vector<int>& subject_begin,
                       const std::vector<int>& fixed_indices) const;
};

/// Integer proposal for Z. Returns (u, log g(u|v), log g(v|u)).
std::tuple<long, double, double> propose_z(long v, long y, Rng& rng);
/// log g(u | v, y); -inf when u is not reachable.
double z_proposal_log_density(long u, long v, long y);

struct AdaptDiagnostic {
  std::string block;
  long iterations = 0;  // times the block was selected
  double acceptance = 0.0;
  double kappa = 1.0;
};

struct Trace {
  std::vector<std::string> alpha_names;
  std::vector<std::string> psi_names;
  Eigen::MatrixXd alpha;  // stored samples x p
  Eigen::MatrixXd psi;    // stored samples x q
  std::vector<double> dbeta;
  std::vector<double> depsilon;  // empty unless the rate random effect is on
  std::vector<int> z_selected;   // observation indices
  std::vector<std::vector<long>> z_draws;  // stored samples x selected
  // Running posterior means per observation over stored samples.
  std::vector<std::string> obs_subject;
  std::vector<double> obs_time;
  std::vector<long> obs_y;
  std::vector<double> z_mean, lambda_mean, mu_mean;
  std::vector<AdaptDiagnostic> adapt;

  long samples() const { return static_cast<long>(dbeta.size()); }
};

class Sampler {
 public:
  Sampler(std::vector<ObservationDesign> rows, std::vector<int> subject_begin, ModelSpec spec,
          PriorSpec prior, SamplerConfig config, ModelKind kind = ModelKind::BdPrem);
  Sampler(const Dataset& data, const PriorSpec& prior, const SamplerConfig& config,
          ModelKind kind = ModelKind::BdPrem, bool rate_random_effect = false);

  const ChainState& state() const { return state_; }
  /// Replaces the state and rebuilds every cached quantity.
  void set_state(const ChainState& s);
  /// Replaces the reported counts (used by joint-distribution checks).
  void set_reported(const std::vector<long>& y);
  const std::vector<ObservationDesign>& rows() const { return rows_; }
  const std::vector<int>& subject_begin() const { return subject_begin_; }
  const ModelSpec& spec() const { return spec_; }
  const PriorSpec& prior() const { return prior_; }

  void update_eta(Rng& rng);
  void update_z(Rng& rng);
  void update_alpha_v(Rng& rng);
  void update_alpha_f(Rng& rng);
  void update_dbeta_inv(Rng& rng);
  void update_psi(Rng& rng);
  void update_epsilon(Rng& rng);
  void update_depsilon_inv(Rng& rng);

  /// Picks one block by the scan probabilities and updates it.
  Block step(Rng& rng);
  void set_adaptation(bool on) { adapting_ = on; }

  const std::vector<Block>& active_blocks() const { return active_; }
  const std::map<Block, double>& scan() const { return scan_; }
  const AdaptiveScale& scale(Block b) const;
  long selections(Block b) const;

  double lambda(std::size_t obs) const;  // current reporting rate
  double mu(std::size_t obs) const;      // current Poisson mean

 private:
  void init_state();
  void init_shapes();
  void rebuild_cache();
  double alpha_log_prior(const Eigen::VectorXd& alpha) const;
  double z_log_target(std::size_t obs, long z) const;
  void adapt(Block b);

  std::vector<ObservationDesign> rows_;
  std::vector<int> subject_begin_;
  ModelSpec spec_;
  PriorSpec prior_;
  SamplerConfig config_;
  ModelKind kind_;
  bool adapting_ = true;

  ChainState state_;
  std::vector<Block> active_;
  std::map<Block, double> scan_;
  std::array<AdaptiveScale, 7> scales_{};
  std::array<long, 7> selected_{};

  Eigen::MatrixXd xf_;  // n x |F|, first row of each subject
  Eigen::MatrixXd xv_;  // N x |V|
  Eigen::MatrixXd w_;   // N x q
  Eigen::MatrixXd prior_prec_;  // inverse of sigma_alpha
  Eigen::MatrixXd psi_prec_;

  // caches
  Eigen::VectorXd xv_alpha_;     // x^(V)' alpha^(V) per observation
  Eigen::VectorXd exp_xv_;       // exp of the above
  Eigen::VectorXd log_lambda_;   // w' psi (+ epsilon_i)
  Eigen::VectorXd bd_lp_;        // log P(Y | Z, lambda)
  Eigen::VectorXd subj_sum_z_;
  Eigen::VectorXd subj_sum_exp_;  // sum_j exp(x^(V)' alpha^(V))

  Eigen::VectorXd eta_shape_, alpha_v_shape_, psi_shape_, eps_shape_;
};

/// Runs a full chain: burn-in, thinning, running means and diagnostics.
Trace run_chain(Sampler& sampler, const SamplerConfig& config, Rng& rng,
                const std::vector<std::string>& subject_ids = {});
Trace run_chain(const Dataset& data, const PriorSpec& prior, const SamplerConfig& config,
                ModelKind kind = ModelKind::BdPrem, bool rate_random_effect = false);

}  // namespace bdprem
