#pragma once

// Long-format count data: one row per (subject, visit).
//
//   subject_id,time,y,<covariate columns...>
//
// A covariate named "Intercept" that is absent from the file is taken to be 1.
// The random effect is a subject intercept (h = 1).

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "bdprem/config.hpp"
#include "bdprem/prem.hpp"
#include "bdprem/special.hpp"

namespace bdprem {

struct DataSchema {
  std::vector<std::string> alpha_names;  // x columns, in coefficient order
  std::vector<std::string> alpha_fixed;  // subset that is constant within subject
  std::vector<std::string> w_names;      // rate-model columns, in psi order

  /// [model] section: alpha = ..., alpha_fixed = ..., psi = ...
  static DataSchema from_config(const ConfigSection& sec);
};

struct Dataset {
  DataSchema schema;
  std::vector<std::string> covariate_columns;   // file columns after subject_id,time,y
  std::vector<std::vector<double>> covariates;  // per row, covariate_columns order
  std::vector<std::string> subject_ids;
  std::vector<int> subject_begin;  // n + 1 offsets into rows
  std::vector<ObservationDesign> rows;

  int n_subjects() const { return static_cast<int>(subject_ids.size()); }
  int n_obs() const { return static_cast<int>(rows.size()); }
  ModelSpec model_spec(bool rate_random_effect = false) const;

  /// Re-derives the x/h/w design rows from the covariate table.
  void rebuild_design();
};

Dataset parse_dataset(std::istream& in, const std::string& source, const DataSchema& schema);
Dataset load_dataset(const std::filesystem::path& path, const DataSchema& schema);

/// Inverse of parse_dataset for data in canonical form (sorted rows, numbers
/// written in shortest round-trip notation).
void write_dataset(std::ostream& out, const Dataset& data);
void save_dataset(const std::filesystem::path& path, const Dataset& data);

// Synthetic design shaped like a three-arm behavioural trial: visits at months
// 0,3,6,9,15, baseline always observed and each follow-up kept with probability
// `retention`. Arms C, I, T are equally likely.
struct TrialDesignOptions {
  int n_subjects = 173;
  double retention = 0.8;
  std::vector<double> months{0, 3, 6, 9, 15};
  double p_idu = 0.2;
  double p_msm = 0.5;
  double p_casual = 0.3;
  double p_trade = 0.1;
};

/// Schema matching trial_design(): 17 alpha coefficients (Intercept, IDU, MSM
/// fixed) and 6 rate coefficients.
DataSchema trial_schema();

/// Covariate table with y = 0 everywhere; callers fill in y and rebuild.
Dataset trial_design(const TrialDesignOptions& opt, Rng& rng);

}  // namespace bdprem
