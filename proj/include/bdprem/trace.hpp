#pragma once

// Trace directory layout (column 1 of every sample file is the 1-based sample index):
//
//   alpha.csv       sample,<alpha names>
//   psi.csv         sample,<psi names>            (absent for a plain PREM fit)
//   dbeta.csv       sample,dbeta
//   depsilon.csv    sample,depsilon               (rate random effect only)
//   z_selected.csv  sample,z_<obs>...             (only when observations were selected)
//   adapt.csv       block,iterations,acceptance,kappa
//   obs_means.csv   obs,subject_id,time,y,z_mean,lambda_mean,mu_mean

#include <filesystem>

#include "bdprem/mcmc.hpp"

namespace bdprem {

void write_trace(const std::filesystem::path& dir, const Trace& trace);
Trace read_trace(const std::filesystem::path& dir);

}  // namespace bdprem
