#pragma once

// Simulation study harness: generate data from known truths over a design,
// fit one or more models per replicate, and tabulate recovery statistics.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bdprem/dataset.hpp"
#include "bdprem/mcmc.hpp"
#include "bdprem/priors.hpp"

namespace bdprem {

enum class Generator { BdPrem, Prem };

struct SimulationTruth {
  Eigen::VectorXd alpha_true;
  Eigen::VectorXd psi_true;
  double d_beta_true = 0.98;
  Generator generator = Generator::BdPrem;
  int n_subjects = 173;
  int replicates = 1;

  void validate() const;  // throws ValidationError
};

struct GeneratedData {
  Dataset data;           // y filled in
  std::vector<long> z;    // hidden true counts
  Eigen::VectorXd beta;   // hidden random intercepts
};

/// beta_i ~ N(0, D), Z ~ Poisson(exp(x'alpha + beta_i)), Y ~ BD(Z, exp(w'psi))
/// (or Y = Z for the PREM generator).
GeneratedData generate_dataset(const SimulationTruth& truth, const Dataset& design, Rng& rng);

struct FitSpec {
  std::string label;  // "bdprem", "prem", ...
  ModelKind kind = ModelKind::BdPrem;
  PriorSpec prior;
  SamplerConfig sampler;
};

struct ReplicateFit {
  int replicate = 0;
  std::string model;
  std::vector<std::string> names;  // alpha names, psi:<name>, D_beta
  Eigen::VectorXd mean, var, lo, hi;
};

struct StudyRow {
  std::string parameter;
  std::string model;
  double truth = 0.0;
  double mse = 0.0;
  double bias = 0.0;
  double var = 0.0;      // population variance of the posterior means
  double avg_var = 0.0;  // average posterior variance
  double coverage = 0.0;
  double bias_t = 0.0;   // bias / sqrt(var / R); nan when var = 0
};

/// Truths keyed by the ReplicateFit names. Independent of the order of `fits`.
std::vector<StudyRow> aggregate_report(std::vector<ReplicateFit> fits,
                                       const std::map<std::string, double>& truth);
std::map<std::string, double> truth_by_name(const SimulationTruth& truth, const DataSchema& schema);

struct StudyOptions {
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: hardware concurrency
  std::optional<std::filesystem::path> out_dir;  // per-replicate data and traces
};

struct StudyReport {
  std::vector<StudyRow> rows;
  std::vector<ReplicateFit> fits;
};

/// Replicate r uses streams seeded by (seed, r, k) for k = 0 (data) and k = fit + 1.
StudyReport replicate_study(const SimulationTruth& truth, const Dataset& design,
                            const std::vector<FitSpec>& fits, const StudyOptions& options);

void write_study_report(std::ostream& out, const std::vector<StudyRow>& rows);
void write_replicate_estimates(std::ostream& out, const std::vector<ReplicateFit>& fits);

// Scenario file:
//
//   [design]   n_subjects, retention, p_idu, p_msm, p_casual, p_trade, seed
//   [truth]    generator = bdprem|prem, d_beta, replicates
//   [alpha_truth] / [psi_truth]   rows "name, value"
//   [fit]      models = bdprem, prem; prior = <prior file>; iterations, burn_in, thin, seed
struct Scenario {
  SimulationTruth truth;
  TrialDesignOptions design;
  std::uint64_t design_seed = 1;
  std::vector<FitSpec> fits;
  std::uint64_t seed = 1;
};

Scenario load_scenario(const std::filesystem::path& path);

}  // namespace bdprem
