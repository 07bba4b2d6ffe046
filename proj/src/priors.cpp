#include "bdprem/priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "bdprem/adaptive.hpp"
#include "bdprem/bd_process.hpp"
#include "bdprem/csv.hpp"
#include "bdprem/error.hpp"
#include "bdprem/prem.hpp"
#include "bdprem/random.hpp"

namespace bdprem {
namespace {

bool is_spd(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  if (!m.isApprox(m.transpose(), 1e-10)) return false;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

void require_spd(const Eigen::MatrixXd& m, const std::string& what) {
  if (!is_spd(m)) throw std::domain_error(what + " must be symmetric positive definite");
}

std::size_t index_of(const std::vector<std::string>& names, const std::string& name,
                     const std::string& context) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ValidationError(context + ": unknown coefficient '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

struct SampleMoments {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};

SampleMoments moments_of(const std::vector<Eigen::VectorXd>& draws, Eigen::Index dim) {
  SampleMoments m{Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim)};
  if (draws.empty()) return m;
  for (const auto& d : draws) m.mean += d;
  m.mean /= static_cast<double>(draws.size());
  for (const auto& d : draws) m.var += (d - m.mean).cwiseAbs2();
  m.var /= static_cast<double>(std::max<std::size_t>(draws.size() - 1, 1));
  return m;
}

}  // namespace

double InverseGamma::log_density(double x) const {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

void PriorSpec::validate() const {
  auto check = [](const std::vector<std::string>& names, const Eigen::VectorXd& m,
                  const Eigen::MatrixXd& s, const char* label) {
    if (static_cast<Eigen::Index>(names.size()) != m.size() || s.rows() != m.size() ||
        s.cols() != m.size()) {
      throw ValidationError(std::string("prior for ") + label + " has inconsistent dimensions");
    }
    if (!m.allFinite()) throw ValidationError(std::string("prior mean for ") + label + " is not finite");
    if (!is_spd(s)) {
      throw ValidationError(std::string("prior covariance for ") + label +
                            " is not symmetric positive definite");
    }
  };
  check(alpha_names, m_alpha, sigma_alpha, "alpha");
  check(psi_names, m_psi, sigma_psi, "psi");
  auto check_ig = [](const InverseGamma& ig, const char* label) {
    if (!(ig.shape > 0.0) || !(ig.scale > 0.0) || !std::isfinite(ig.shape) ||
        !std::isfinite(ig.scale)) {
      throw ValidationError(std::string("inverse-gamma prior for ") + label +
                            " needs positive shape and scale");
    }
  };
  check_ig(d_beta, "D_beta");
  if (d_epsilon) check_ig(*d_epsilon, "D_epsilon");
}

PriorSpec make_independent_prior(std::vector<std::string> alpha_names,
                                 const std::vector<double>& alpha_mean,
                                 const std::vector<double>& alpha_sd,
                                 std::vector<std::string> psi_names,
                                 const std::vector<double>& psi_mean,
                                 const std::vector<double>& psi_sd, InverseGamma d_beta) {
  auto vec = [](const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  };
  if (alpha_mean.size() != alpha_names.size() || alpha_sd.size() != alpha_names.size() ||
      psi_mean.size() != psi_names.size() || psi_sd.size() != psi_names.size()) {
    throw ValidationError("prior tables have inconsistent lengths");
  }
  PriorSpec p;
  p.alpha_names = std::move(alpha_names);
  p.m_alpha = vec(alpha_mean);
  p.sigma_alpha = vec(alpha_sd).cwiseAbs2().asDiagonal();
  p.psi_names = std::move(psi_names);
  p.m_psi = vec(psi_mean);
  p.sigma_psi = vec(psi_sd).cwiseAbs2().asDiagonal();
  p.d_beta = d_beta;
  p.validate();
  return p;
}

double point_range_sd(double m, double d) {
  if (!(d > std::exp(m))) {
    throw std::domain_error("point-and-range: the range edge d must exceed exp(m)");
  }
  return (std::log(d) - m) / 1.96;
}

// --- data-augmentation prior -------------------------------------------------

double da_log_prior(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta0, double d_beta,
                    const Eigen::VectorXd& psi, const DaPriorData& data,
                    const InverseGamma& pre_prior) {
  if (!(d_beta > 0.0)) throw std::domain_error("da_log_prior: D_beta must be positive");
  if (beta0.size() != static_cast<Eigen::Index>(data.prem_rows.size())) {
    throw std::invalid_argument("da_log_prior: one beta0 per PREM prior row is required");
  }
  double lp = pre_prior.log_density(d_beta);
  for (std::size_t k = 0; k < data.prem_rows.size(); ++k) {
    const auto& row = data.prem_rows[k];
    if (row.x0.size() != alpha.size()) throw std::invalid_argument("da_log_prior: x0 length");
    const double b = beta0[static_cast<Eigen::Index>(k)];
    lp += poisson_log_lik(row.z0, row.x0.dot(alpha) + b);
    lp += -0.5 * std::log(2.0 * std::numbers::pi * d_beta) - 0.5 * b * b / d_beta;
  }
  for (const auto& row : data.bd_rows) {
    if (row.w0.size() != psi.size()) throw std::invalid_argument("da_log_prior: w0 length");
    lp += bd_log_pmf_log_rate(row.y0, row.z0, row.w0.dot(psi));
  }
  return lp;
}

PriorSpec summarize_da_prior(const DaPriorData& data, const InverseGamma& pre_prior,
                             std::vector<std::string> alpha_names,
                             std::vector<std::string> psi_names,
                             const DaSummaryOptions& options) {
  const auto p = static_cast<Eigen::Index>(alpha_names.size());
  const auto q = static_cast<Eigen::Index>(psi_names.size());
  const auto k1 = static_cast<Eigen::Index>(data.prem_rows.size());
  const auto k2 = static_cast<Eigen::Index>(data.bd_rows.size());
  if (k1 < p || k2 < q) {
    throw ValidationError("data-augmentation prior needs at least as many PREM rows as alpha "
                          "coefficients and BD rows as psi coefficients");
  }
  if (options.iterations <= options.burn_in || options.thin < 1) {
    throw ValidationError("data-augmentation summary: bad iteration settings");
  }

  Eigen::MatrixXd x0(k1, p);
  Eigen::VectorXd z0(k1);
  for (Eigen::Index k = 0; k < k1; ++k) {
    const auto& row = data.prem_rows[static_cast<std::size_t>(k)];
    if (row.x0.size() != p) throw ValidationError("DA PREM row has the wrong number of covariates");
    x0.row(k) = row.x0.transpose();
    z0[k] = row.z0;
  }
  Eigen::MatrixXd w0(k2, q);
  for (Eigen::Index k = 0; k < k2; ++k) {
    const auto& row = data.bd_rows[static_cast<std::size_t>(k)];
    if (row.w0.size() != q) throw ValidationError("DA BD row has the wrong number of covariates");
    w0.row(k) = row.w0.transpose();
  }

  // Flat prior on alpha: alpha | eta, D ~ N((X'X)^-1 X'eta, D (X'X)^-1).
  Eigen::LLT<Eigen::MatrixXd> xtx(x0.transpose() * x0);
  if (p > 0 && (xtx.info() != Eigen::Success ||
                Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(x0).rank() < p)) {
    throw ValidationError("DA PREM prior rows do not identify every alpha coefficient");
  }

  Rng rng = make_rng({options.seed, 0xDAu});
  double d = pre_prior.shape > 1.0 ? pre_prior.mean() : pre_prior.scale;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta = (z0.array() + 0.5).log().matrix();
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(q);

  AdaptiveScale eta_scale{.kappa = 1.0, .target_pi = 0.4};
  AdaptiveScale psi_scale{.kappa = 1.0, .target_pi = 0.25};
  Eigen::VectorXd eta_shape = (1.0 / (1.0 / d + z0.array().max(0.5))).sqrt().matrix();
  const double psi_prec = options.psi_pre_prior_sd > 0.0
                              ? 1.0 / (options.psi_pre_prior_sd * options.psi_pre_prior_sd)
                              : 0.0;
  Eigen::VectorXd psi_shape(q);
  for (Eigen::Index j = 0; j < q; ++j) {
    psi_shape[j] = 1.0 / std::sqrt(psi_prec + 0.5 * w0.col(j).squaredNorm() + 1e-3);
  }

  auto psi_target = [&](const Eigen::VectorXd& v) {
    double lp = -0.5 * psi_prec * v.squaredNorm();
    const Eigen::VectorXd lin = w0 * v;
    for (Eigen::Index k = 0; k < k2; ++k) {
      const auto& row = data.bd_rows[static_cast<std::size_t>(k)];
      lp += bd_log_pmf_log_rate(row.y0, row.z0, lin[k]);
    }
    return lp;
  };
  double psi_lp = psi_target(psi);

  std::vector<Eigen::VectorXd> alpha_draws, psi_draws;
  std::vector<double> d_draws;
  for (long it = 1; it <= options.iterations; ++it) {
    // eta_k = x0_k'alpha + beta0_k
    const Eigen::VectorXd centre = x0 * alpha;
    for (Eigen::Index k = 0; k < k1; ++k) {
      auto target = [&](double e) {
        const double dev = e - centre[k];
        return z0[k] * e - std::exp(e) - 0.5 * dev * dev / d;
      };
      const double prop = eta[k] + std::sqrt(eta_scale.kappa) * eta_shape[k] * draw_normal(rng);
      const bool ok = accept_log_ratio(rng, target(prop) - target(eta[k]));
      if (ok) eta[k] = prop;
      eta_scale.record(ok);
    }
    eta_scale = adapt_scale(eta_scale, it);

    if (p > 0) {
      const Eigen::VectorXd mean = xtx.solve(x0.transpose() * eta);
      const Eigen::VectorXd noise = xtx.matrixU().solve(draw_normal_vector(rng, p));
      alpha = mean + std::sqrt(d) * noise;
    }

    const double ss = k1 > 0 ? (eta - x0 * alpha).squaredNorm() : 0.0;
    d = 1.0 / draw_gamma_rate(rng, pre_prior.shape + 0.5 * static_cast<double>(k1),
                              pre_prior.scale + 0.5 * ss);

    if (q > 0) {
      Eigen::VectorXd prop = psi;
      for (Eigen::Index j = 0; j < q; ++j) {
        prop[j] += std::sqrt(psi_scale.kappa) * psi_shape[j] * draw_normal(rng);
      }
      const double prop_lp = psi_target(prop);
      const bool ok = accept_log_ratio(rng, prop_lp - psi_lp);
      if (ok) {
        psi = prop;
        psi_lp = prop_lp;
      }
      psi_scale.record(ok);
      psi_scale = adapt_scale(psi_scale, it);
    }

    if (it > options.burn_in && (it - options.burn_in) % options.thin == 0) {
      alpha_draws.push_back(alpha);
      psi_draws.push_back(psi);
      d_draws.push_back(d);
    }
  }

  const auto a_mom = moments_of(alpha_draws, p);
  const auto p_mom = moments_of(psi_draws, q);
  double d_mean = 0.0, d_var = 0.0;
  for (double v : d_draws) d_mean += v;
  d_mean /= static_cast<double>(d_draws.size());
  for (double v : d_draws) d_var += (v - d_mean) * (v - d_mean);
  d_var /= static_cast<double>(std::max<std::size_t>(d_draws.size() - 1, 1));

  InverseGamma ig;
  ig.shape = d_mean * d_mean / d_var + 2.0;
  ig.scale = d_mean * (ig.shape - 1.0);

  PriorSpec prior;
  prior.alpha_names = std::move(alpha_names);
  prior.m_alpha = a_mom.mean;
  prior.sigma_alpha = a_mom.var.asDiagonal();
  prior.psi_names = std::move(psi_names);
  prior.m_psi = p_mom.mean;
  prior.sigma_psi = p_mom.var.asDiagonal();
  prior.d_beta = ig;
  prior.validate();
  return prior;
}

DaPriorData load_da_prior_data(const std::string& prem_csv, const std::string& bd_csv,
                               const std::vector<std::string>& alpha_names,
                               const std::vector<std::string>& psi_names) {
  DaPriorData out;
  {
    const CsvTable t = read_csv(prem_csv);
    const auto zc = t.column("z0");
    std::vector<std::size_t> cols;
    for (const auto& n : alpha_names) cols.push_back(t.column(n));
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      DaPremRow row;
      row.z0 = t.number(r, zc);
      if (!(row.z0 >= 0.0)) {
        throw ValidationError(t.source + ":" + std::to_string(t.lines[r]) + ": z0 must be >= 0");
      }
      row.x0.resize(static_cast<Eigen::Index>(cols.size()));
      for (std::size_t c = 0; c < cols.size(); ++c) row.x0[static_cast<Eigen::Index>(c)] = t.number(r, cols[c]);
      out.prem_rows.push_back(std::move(row));
    }
  }
  {
    const CsvTable t = read_csv(bd_csv);
    const auto yc = t.column("y0");
    const auto zc = t.column("z0");
    std::vector<std::size_t> cols;
    for (const auto& n : psi_names) cols.push_back(t.column(n));
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const std::string where = t.source + ":" + std::to_string(t.lines[r]);
      DaBdRow row;
      row.y0 = parse_long(t.rows[r][yc], where + " y0");
      row.z0 = parse_long(t.rows[r][zc], where + " z0");
      if (row.y0 < 0 || row.z0 < 0) throw ValidationError(where + ": counts must be >= 0");
      row.w0.resize(static_cast<Eigen::Index>(cols.size()));
      for (std::size_t c = 0; c < cols.size(); ++c) row.w0[static_cast<Eigen::Index>(c)] = t.number(r, cols[c]);
      out.bd_rows.push_back(std::move(row));
    }
  }
  return out;
}

// --- previous data set ---------------------------------------------------------

NormalPrior ds_prior_from_posterior(const Eigen::VectorXd& post_mean,
                                    const Eigen::MatrixXd& post_cov, double g) {
  if (!(g > 0.0)) throw std::domain_error("variance inflation g must be positive");
  if (post_cov.rows() != post_mean.size()) throw std::invalid_argument("mean/cov size mismatch");
  require_spd(post_cov, "previous posterior covariance");
  return {post_mean, g * post_cov};
}

NormalPrior split_average_difference_prior(const Eigen::VectorXd& avg_mean,
                                           const Eigen::MatrixXd& avg_cov, double diff_sd,
                                           double diff_corr) {
  if (!(diff_sd > 0.0)) throw std::domain_error("difference prior SD must be positive");
  if (!(diff_corr >= 0.0 && diff_corr < 1.0)) {
    throw std::domain_error("difference prior correlation must lie in [0, 1)");
  }
  const Eigen::Index k = avg_mean.size();
  if (avg_cov.rows() != k || avg_cov.cols() != k) throw std::invalid_argument("mean/cov size mismatch");
  require_spd(avg_cov, "average-effect covariance");

  const Eigen::MatrixXd diff =
      diff_sd * diff_sd *
      ((1.0 - diff_corr) * Eigen::MatrixXd::Identity(k, k) +
       diff_corr * Eigen::MatrixXd::Ones(k, k));
  NormalPrior out;
  out.mean.resize(2 * k);
  out.mean << avg_mean, avg_mean;
  out.cov.resize(2 * k, 2 * k);
  out.cov.topLeftCorner(k, k) = avg_cov + diff / 4.0;
  out.cov.bottomRightCorner(k, k) = avg_cov + diff / 4.0;
  out.cov.topRightCorner(k, k) = avg_cov - diff / 4.0;
  out.cov.bottomLeftCorner(k, k) = avg_cov - diff / 4.0;
  require_spd(out.cov, "split prior covariance");
  return out;
}

InverseGamma ig_from_equivalent_sample(double n_equiv_obs, double obs_per_subject,
                                       double d_bar) {
  if (!(n_equiv_obs > 0.0) || !(obs_per_subject > 0.0) || !(d_bar > 0.0)) {
    throw std::domain_error("equivalent-sample inputs must be positive");
  }
  InverseGamma ig;
  ig.shape = (n_equiv_obs / obs_per_subject) / 2.0;
  if (!(ig.shape > 1.0)) {
    throw std::domain_error("equivalent sample too small: IG shape <= 1 has no mean");
  }
  ig.scale = d_bar * (ig.shape - 1.0);
  return ig;
}

NormalPrior assemble_ds_prior(const std::vector<std::string>& previous_names,
                              const Eigen::VectorXd& previous_mean,
                              const Eigen::MatrixXd& previous_cov, double g,
                              const std::vector<std::string>& new_names,
                              const std::vector<SplitGroup>& splits) {
  const NormalPrior inflated = ds_prior_from_posterior(previous_mean, previous_cov, g);
  const auto n_new = static_cast<Eigen::Index>(new_names.size());
  const auto n_prev = static_cast<Eigen::Index>(previous_names.size());
  Eigen::Index n_diff = 0;
  for (const auto& s : splits) n_diff += static_cast<Eigen::Index>(s.previous.size());

  // new = M prev + N diff, diff ~ N(0, blockdiag(S_group))
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_new, n_prev);
  Eigen::MatrixXd nmat = Eigen::MatrixXd::Zero(n_new, n_diff);
  Eigen::MatrixXd sd = Eigen::MatrixXd::Zero(n_diff, n_diff);
  std::vector<bool> assigned(new_names.size(), false);

  Eigen::Index offset = 0;
  for (const auto& s : splits) {
    const std::size_t k = s.previous.size();
    if (s.first.size() != k || s.second.size() != k || k == 0) {
      throw ValidationError("split group needs equally many previous, first and second names");
    }
    if (!(s.diff_sd > 0.0) || !(s.diff_corr >= 0.0 && s.diff_corr < 1.0)) {
      throw ValidationError("split group difference SD must be > 0 and correlation in [0, 1)");
    }
    const auto kk = static_cast<Eigen::Index>(k);
    sd.block(offset, offset, kk, kk) =
        s.diff_sd * s.diff_sd *
        ((1.0 - s.diff_corr) * Eigen::MatrixXd::Identity(kk, kk) +
         s.diff_corr * Eigen::MatrixXd::Ones(kk, kk));
    for (std::size_t j = 0; j < k; ++j) {
      const auto pj = static_cast<Eigen::Index>(index_of(previous_names, s.previous[j], "split"));
      const auto a = index_of(new_names, s.first[j], "split");
      const auto b = index_of(new_names, s.second[j], "split");
      if (assigned[a] || assigned[b]) throw ValidationError("coefficient assigned twice in split");
      assigned[a] = assigned[b] = true;
      m(static_cast<Eigen::Index>(a), pj) = 1.0;
      m(static_cast<Eigen::Index>(b), pj) = 1.0;
      nmat(static_cast<Eigen::Index>(a), offset + static_cast<Eigen::Index>(j)) = 0.5;
      nmat(static_cast<Eigen::Index>(b), offset + static_cast<Eigen::Index>(j)) = -0.5;
    }
    offset += kk;
  }
  for (std::size_t i = 0; i < new_names.size(); ++i) {
    if (assigned[i]) continue;
    const auto pj = static_cast<Eigen::Index>(
        index_of(previous_names, new_names[i], "previous-data-set prior"));
    m(static_cast<Eigen::Index>(i), pj) = 1.0;
  }

  NormalPrior out;
  out.mean = m * inflated.mean;
  out.cov = m * inflated.cov * m.transpose() + nmat * sd * nmat.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  require_spd(out.cov, "previous-data-set prior covariance");
  return out;
}

SplitGroup parse_split_group(const std::string& text, double diff_sd, double diff_corr) {
  auto words = [](const std::string& s) {
    std::vector<std::string> out;
    for (const auto& f : split_fields(s, ' ')) {
      if (!f.empty()) out.push_back(f);
    }
    return out;
  };
  const auto arrow = text.find("->");
  const auto bar = text.find('|');
  if (arrow == std::string::npos || bar == std::string::npos || bar < arrow) {
    throw ValidationError("split group must look like 'prev... -> first... | second...': " + text);
  }
  SplitGroup g;
  g.previous = words(text.substr(0, arrow));
  g.first = words(text.substr(arrow + 2, bar - arrow - 2));
  g.second = words(text.substr(bar + 1));
  g.diff_sd = diff_sd;
  g.diff_corr = diff_corr;
  if (g.previous.empty() || g.previous.size() != g.first.size() ||
      g.previous.size() != g.second.size()) {
    throw ValidationError("split group lists differ in length: " + text);
  }
  return g;
}

namespace {

void read_table(const ConfigSection& sec, const std::vector<std::string>& names,
                Eigen::VectorXd& mean, Eigen::VectorXd& sd) {
  mean.resize(static_cast<Eigen::Index>(names.size()));
  sd.resize(static_cast<Eigen::Index>(names.size()));
  std::vector<bool> seen(names.size(), false);
  for (const auto& row : sec.rows) {
    const std::string where = "[" + sec.name + "] line " + std::to_string(row.line);
    if (row.fields.size() != 3) throw ValidationError(where + ": expected 'name, mean, sd'");
    const auto i = index_of(names, row.fields[0], where);
    if (seen[i]) throw ValidationError(where + ": coefficient listed twice");
    seen[i] = true;
    const double m = parse_double(row.fields[1], where);
    double s = 0.0;
    if (row.fields[2].rfind("d=", 0) == 0) {
      const double d = parse_double(row.fields[2].substr(2), where);
      try {
        s = point_range_sd(m, d);
      } catch (const std::domain_error& e) {
        throw ValidationError(where + ": " + e.what());
      }
    } else {
      s = parse_double(row.fields[2], where);
    }
    if (!(s > 0.0)) throw ValidationError(where + ": prior SD must be positive");
    mean[static_cast<Eigen::Index>(i)] = m;
    sd[static_cast<Eigen::Index>(i)] = s;
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!seen[i]) throw ValidationError("[" + sec.name + "] has no row for '" + names[i] + "'");
  }
}

InverseGamma read_ig(const ConfigSection& sec) {
  InverseGamma ig;
  ig.shape = parse_double(sec.require("a"), "[" + sec.name + "] a");
  ig.scale = parse_double(sec.require("b"), "[" + sec.name + "] b");
  return ig;
}

}  // namespace

PriorSpec parse_prior_tables(const ConfigFile& cfg, const std::vector<std::string>& alpha_names,
                             const std::vector<std::string>& psi_names) {
  PriorSpec p;
  Eigen::VectorXd sd;
  p.alpha_names = alpha_names;
  read_table(cfg.section("alpha"), alpha_names, p.m_alpha, sd);
  p.sigma_alpha = sd.cwiseAbs2().asDiagonal();
  p.psi_names = psi_names;
  if (!psi_names.empty()) {
    read_table(cfg.section("psi"), psi_names, p.m_psi, sd);
    p.sigma_psi = sd.cwiseAbs2().asDiagonal();
  } else {
    p.m_psi.resize(0);
    p.sigma_psi.resize(0, 0);
  }
  p.d_beta = read_ig(cfg.section("dbeta"));
  if (const auto* eps = cfg.find("depsilon")) p.d_epsilon = read_ig(*eps);
  p.validate();
  return p;
}

}  // namespace bdprem
