#include "bdprem/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bdprem/bd_process.hpp"
#include "bdprem/error.hpp"
#include "bdprem/random.hpp"

namespace bdprem {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t slot(Block b) { return static_cast<std::size_t>(b); }

double default_mass(Block b) {
  switch (b) {
    case Block::Eta: return 0.2;
    case Block::Z: return 0.2;
    case Block::AlphaV: return 0.26;
    case Block::DBeta: return 0.07;
    case Block::AlphaF: return 0.07;
    case Block::Psi: return 0.07;
    case Block::RateEffect: return 0.13;
  }
  return 0.0;
}

Eigen::VectorXd take(const Eigen::VectorXd& v, const std::vector<int>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Eigen::Index>(k)] = v[idx[k]];
  return out;
}

Eigen::MatrixXd take(const Eigen::MatrixXd& m, const std::vector<int>& r, const std::vector<int>& c) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(c.size()));
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (std::size_t j = 0; j < c.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(r[i], c[j]);
    }
  }
  return out;
}

}  // namespace

const char* block_name(Block b) {
  switch (b) {
    case Block::Eta: return "eta";
    case Block::Z: return "z";
    case Block::AlphaV: return "alpha_v";
    case Block::DBeta: return "dbeta";
    case Block::AlphaF: return "alpha_f";
    case Block::Psi: return "psi";
    case Block::RateEffect: return "epsilon";
  }
  return "?";
}

Block parse_block(const std::string& name) {
  for (Block b : kAllBlocks) {
    if (name == block_name(b)) return b;
  }
  throw ValidationError("unknown sampler block '" + name + "'");
}

std::map<Block, double> SamplerConfig::default_scan(const std::vector<Block>& active) {
  double total = 0.0;
  for (Block b : active) total += default_mass(b);
  std::map<Block, double> out;
  for (Block b : active) out[b] = default_mass(b) / total;
  return out;
}

Eigen::VectorXd ChainState::beta(const std::vector<ObservationDesign>& rows,
                                 const std::vector<int>& subject_begin,
                                 const std::vector<int>& fixed_indices) const {
  Eigen::VectorXd b = eta;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const auto& x = rows[static_cast<std::size_t>(subject_begin[static_cast<std::size_t>(i)])].x;
    for (int k : fixed_indices) b[i] -= x[k] * alpha[k];
  }
  return b;
}

// --- Z proposal ----------------------------------------------------------------

double z_proposal_log_density(long u, long v, long y) {
  if (v == 0) return (u == 0 || u == 1) ? -std::log(2.0) : kNegInf;
  if (v == 1) {
    if (y > 0) return (u == 1 || u == 2) ? -std::log(2.0) : kNegInf;
    return (u >= 0 && u <= 2) ? -std::log(3.0) : kNegInf;
  }
  const long half = (v + 1) / 2;
  if (u < v - half || u > v + half) return kNegInf;
  return -std::log(static_cast<double>(2 * half + 1));
}

std::tuple<long, double, double> propose_z(long v, long y, Rng& rng) {
  long u = 0;
  if (v == 0) {
    u = std::uniform_int_distribution<long>(0, 1)(rng);
  } else if (v == 1) {
    u = y > 0 ? std::uniform_int_distribution<long>(1, 2)(rng)
              : std::uniform_int_distribution<long>(0, 2)(rng);
  } else {
    const long half = (v + 1) / 2;
    u = std::uniform_int_distribution<long>(v - half, v + half)(rng);
  }
  return {u, z_proposal_log_density(u, v, y), z_proposal_log_density(v, u, y)};
}

// --- sampler -------------------------------------------------------------------

Sampler::Sampler(std::vector<ObservationDesign> rows, std::vector<int> subject_begin,
                 ModelSpec spec, PriorSpec prior, SamplerConfig config, ModelKind kind)
    : rows_(std::move(rows)),
      subject_begin_(std::move(subject_begin)),
      spec_(std::move(spec)),
      prior_(std::move(prior)),
      config_(std::move(config)),
      kind_(kind) {
  spec_.validate();
  if (spec_.r != 1) throw ValidationError("the sampler supports a single random intercept (r = 1)");
  if (subject_begin_.size() < 2 || subject_begin_.front() != 0 ||
      subject_begin_.back() != static_cast<int>(rows_.size())) {
    throw ValidationError("subject offsets do not cover the observations");
  }
  const int n = static_cast<int>(subject_begin_.size()) - 1;
  for (int i = 0; i < n; ++i) {
    const auto lo = static_cast<std::size_t>(subject_begin_[static_cast<std::size_t>(i)]);
    const auto hi = static_cast<std::size_t>(subject_begin_[static_cast<std::size_t>(i) + 1]);
    if (hi <= lo) throw ValidationError("every subject needs at least one observation");
    for (auto o = lo; o < hi; ++o) {
      const auto& r = rows_[o];
      if (r.subject_index != i) throw ValidationError("rows must be grouped by subject");
      if (r.x.size() != spec_.p) throw ValidationError("x row length differs from p");
      if (r.h.size() != 1 || r.h[0] != 1.0) {
        throw ValidationError("the sampler supports h = 1 only");
      }
      if (kind_ == ModelKind::BdPrem && r.w.size() != spec_.q) {
        throw ValidationError("w row length differs from q");
      }
      if (r.y < 0) throw ValidationError("negative reported count");
    }
  }
  if (static_cast<int>(prior_.m_alpha.size()) != spec_.p) {
    throw ValidationError("alpha prior dimension differs from the design");
  }
  if (kind_ == ModelKind::BdPrem && static_cast<int>(prior_.m_psi.size()) != spec_.q) {
    throw ValidationError("psi prior dimension differs from the design");
  }
  if (spec_.use_rate_random_effect && !prior_.d_epsilon) prior_.d_epsilon = InverseGamma{};
  prior_.validate();
  if (config_.thin < 1 || config_.burn_in < 0 || config_.burn_in >= config_.iterations) {
    throw ValidationError("sampler needs thin >= 1 and 0 <= burn_in < iterations");
  }

  active_.push_back(Block::Eta);
  if (kind_ == ModelKind::BdPrem) active_.push_back(Block::Z);
  if (!spec_.varying_indices.empty()) active_.push_back(Block::AlphaV);
  active_.push_back(Block::DBeta);
  if (!spec_.fixed_indices.empty()) active_.push_back(Block::AlphaF);
  if (kind_ == ModelKind::BdPrem && spec_.q > 0) active_.push_back(Block::Psi);
  if (kind_ == ModelKind::BdPrem && spec_.use_rate_random_effect) {
    active_.push_back(Block::RateEffect);
  }

  if (config_.scan.empty()) {
    scan_ = SamplerConfig::default_scan(active_);
  } else {
    double total = 0.0;
    for (auto [b, p] : config_.scan) {
      const bool is_active = std::find(active_.begin(), active_.end(), b) != active_.end();
      if (!(p >= 0.0)) throw ValidationError("scan probabilities must be non-negative");
      if (!is_active && p > 0.0) {
        throw ValidationError(std::string("scan probability given for inactive block ") +
                              block_name(b));
      }
      if (is_active) {
        scan_[b] = p;
        total += p;
      }
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw ValidationError("scan probabilities must sum to 1, got " + format_double(total));
    }
    for (Block b : active_) scan_.try_emplace(b, 0.0);
  }

  for (Block b : kAllBlocks) {
    auto& s = scales_[slot(b)];
    s.kappa = config_.initial_kappa;
    s.t_transform = config_.t_transform;
    s.target_pi = (b == Block::AlphaV || b == Block::Psi) ? config_.target_vector
                                                          : config_.target_scalar;
  }

  xf_.resize(n, static_cast<Eigen::Index>(spec_.fixed_indices.size()));
  for (int i = 0; i < n; ++i) {
    const auto& x = rows_[static_cast<std::size_t>(subject_begin_[static_cast<std::size_t>(i)])].x;
    xf_.row(i) = take(x, spec_.fixed_indices).transpose();
  }
  const auto N = static_cast<Eigen::Index>(rows_.size());
  xv_.resize(N, static_cast<Eigen::Index>(spec_.varying_indices.size()));
  w_.resize(N, kind_ == ModelKind::BdPrem ? spec_.q : 0);
  for (Eigen::Index o = 0; o < N; ++o) {
    const auto& r = rows_[static_cast<std::size_t>(o)];
    xv_.row(o) = take(r.x, spec_.varying_indices).transpose();
    if (kind_ == ModelKind::BdPrem) w_.row(o) = r.w.transpose();
  }
  prior_prec_ = prior_.sigma_alpha.inverse();
  prior_prec_ = 0.5 * (prior_prec_ + prior_prec_.transpose());
  if (kind_ == ModelKind::BdPrem) {
    psi_prec_ = prior_.sigma_psi.inverse();
    psi_prec_ = 0.5 * (psi_prec_ + psi_prec_.transpose());
  }

  init_state();
  init_shapes();
}

Sampler::Sampler(const Dataset& data, const PriorSpec& prior, const SamplerConfig& config,
                 ModelKind kind, bool rate_random_effect)
    : Sampler(data.rows, data.subject_begin, data.model_spec(rate_random_effect), prior, config,
              kind) {
  if (prior.alpha_names != data.schema.alpha_names) {
    throw ValidationError("prior alpha names do not match the data schema");
  }
  if (kind == ModelKind::BdPrem && prior.psi_names != data.schema.w_names) {
    throw ValidationError("prior psi names do not match the data schema");
  }
}

void Sampler::init_state() {
  const auto n = static_cast<Eigen::Index>(subject_begin_.size() - 1);
  ChainState s;
  s.z.resize(rows_.size());
  for (std::size_t o = 0; o < rows_.size(); ++o) s.z[o] = rows_[o].y;
  s.alpha = prior_.m_alpha;
  s.psi = kind_ == ModelKind::BdPrem ? prior_.m_psi : Eigen::VectorXd();
  s.d_beta = prior_.d_beta.shape > 1.0 ? prior_.d_beta.mean() : prior_.d_beta.scale;
  s.eta.resize(n);
  const Eigen::VectorXd af = take(s.alpha, spec_.fixed_indices);
  for (Eigen::Index i = 0; i < n; ++i) s.eta[i] = xf_.row(i).dot(af);
  if (kind_ == ModelKind::BdPrem && spec_.use_rate_random_effect) {
    s.epsilon = Eigen::VectorXd::Zero(n);
    const auto& ig = *prior_.d_epsilon;
    s.d_epsilon = ig.shape > 1.0 ? ig.mean() : ig.scale;
  }
  set_state(s);
}

void Sampler::init_shapes() {
  const auto n = static_cast<Eigen::Index>(subject_begin_.size() - 1);
  eta_shape_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    eta_shape_[i] = 1.0 / std::sqrt(1.0 / state_.d_beta + subj_sum_z_[i]);
  }

  const auto nv = xv_.cols();
  alpha_v_shape_.resize(nv);
  const Eigen::MatrixXd prec_v = take(prior_prec_, spec_.varying_indices, spec_.varying_indices);
  for (Eigen::Index k = 0; k < nv; ++k) {
    double info = prec_v(k, k);
    for (Eigen::Index o = 0; o < xv_.rows(); ++o) {
      info += xv_(o, k) * xv_(o, k) * static_cast<double>(state_.z[static_cast<std::size_t>(o)]);
    }
    alpha_v_shape_[k] = 2.38 / std::sqrt(static_cast<double>(nv) * info);
  }

  const auto q = w_.cols();
  psi_shape_.resize(q);
  for (Eigen::Index k = 0; k < q; ++k) {
    double info = psi_prec_(k, k);
    for (Eigen::Index o = 0; o < w_.rows(); ++o) {
      if (state_.z[static_cast<std::size_t>(o)] > 0) info += 0.5 * w_(o, k) * w_(o, k);
    }
    psi_shape_[k] = 2.38 / std::sqrt(static_cast<double>(q) * info);
  }

  if (state_.epsilon.size() > 0) {
    eps_shape_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double ni = subject_begin_[static_cast<std::size_t>(i) + 1] -
                        subject_begin_[static_cast<std::size_t>(i)];
      eps_shape_[i] = 1.0 / std::sqrt(1.0 / state_.d_epsilon + 0.5 * ni);
    }
  }
}

void Sampler::set_state(const ChainState& s) {
  const auto n = static_cast<Eigen::Index>(subject_begin_.size() - 1);
  if (s.z.size() != rows_.size() || s.eta.size() != n || s.alpha.size() != spec_.p) {
    throw std::invalid_argument("chain state dimensions do not match the data");
  }
  if (kind_ == ModelKind::BdPrem && s.psi.size() != spec_.q) {
    throw std::invalid_argument("chain state psi dimension does not match the design");
  }
  const bool eps_on = kind_ == ModelKind::BdPrem && spec_.use_rate_random_effect;
  if (eps_on != (s.epsilon.size() > 0) || (eps_on && s.epsilon.size() != n)) {
    throw std::invalid_argument("chain state epsilon does not match the model");
  }
  if (!(s.d_beta > 0.0) || (eps_on && !(s.d_epsilon > 0.0))) {
    throw std::invalid_argument("chain state variances must be positive");
  }
  state_ = s;
  if (kind_ == ModelKind::Prem) {
    for (std::size_t o = 0; o < rows_.size(); ++o) state_.z[o] = rows_[o].y;
  }
  rebuild_cache();
}

void Sampler::set_reported(const std::vector<long>& y) {
  if (y.size() != rows_.size()) throw std::invalid_argument("set_reported: size mismatch");
  for (std::size_t o = 0; o < rows_.size(); ++o) {
    if (y[o] < 0) throw std::invalid_argument("set_reported: negative count");
    rows_[o].y = y[o];
  }
  if (kind_ == ModelKind::Prem) {
    for (std::size_t o = 0; o < rows_.size(); ++o) state_.z[o] = rows_[o].y;
  }
  rebuild_cache();
}

void Sampler::rebuild_cache() {
  const auto N = static_cast<Eigen::Index>(rows_.size());
  const auto n = static_cast<Eigen::Index>(subject_begin_.size() - 1);
  const Eigen::VectorXd av = take(state_.alpha, spec_.varying_indices);
  xv_alpha_ = xv_.cols() > 0 ? Eigen::VectorXd(xv_ * av) : Eigen::VectorXd::Zero(N);
  exp_xv_ = xv_alpha_.array().exp().matrix();
  subj_sum_z_ = Eigen::VectorXd::Zero(n);
  subj_sum_exp_ = Eigen::VectorXd::Zero(n);
  for (Eigen::Index o = 0; o < N; ++o) {
    const int i = rows_[static_cast<std::size_t>(o)].subject_index;
    subj_sum_z_[i] += static_cast<double>(state_.z[static_cast<std::size_t>(o)]);
    subj_sum_exp_[i] += exp_xv_[o];
  }
  log_lambda_ = Eigen::VectorXd::Zero(N);
  bd_lp_ = Eigen::VectorXd::Zero(N);
  if (kind_ == ModelKind::BdPrem) {
    if (w_.cols() > 0) log_lambda_ = w_ * state_.psi;
    for (Eigen::Index o = 0; o < N; ++o) {
      const auto& r = rows_[static_cast<std::size_t>(o)];
      if (state_.epsilon.size() > 0) log_lambda_[o] += state_.epsilon[r.subject_index];
      bd_lp_[o] = bd_log_pmf_log_rate(r.y, state_.z[static_cast<std::size_t>(o)], log_lambda_[o]);
      if (bd_lp_[o] == kNegInf) {
        throw std::invalid_argument("chain state has Z = 0 where a positive count was reported");
      }
    }
  }
}

const AdaptiveScale& Sampler::scale(Block b) const { return scales_[slot(b)]; }
long Sampler::selections(Block b) const { return selected_[slot(b)]; }

double Sampler::lambda(std::size_t obs) const {
  return kind_ == ModelKind::BdPrem ? std::exp(log_lambda_[static_cast<Eigen::Index>(obs)]) : 0.0;
}

double Sampler::mu(std::size_t obs) const {
  const auto o = static_cast<Eigen::Index>(obs);
  return std::exp(state_.eta[rows_[obs].subject_index] + xv_alpha_[o]);
}

void Sampler::adapt(Block b) {
  if (!adapting_) return;
  auto& s = scales_[slot(b)];
  s = adapt_scale(s, selected_[slot(b)]);
}

double Sampler::alpha_log_prior(const Eigen::VectorXd& alpha) const {
  const Eigen::VectorXd d = alpha - prior_.m_alpha;
  return -0.5 * d.dot(prior_prec_ * d);
}

double Sampler::z_log_target(std::size_t obs, long z) const {
  const auto o = static_cast<Eigen::Index>(obs);
  const auto& r = rows_[obs];
  const double lp = bd_log_pmf_log_rate(r.y, z, log_lambda_[o]);
  if (lp == kNegInf) return kNegInf;
  return lp + static_cast<double>(z) * (state_.eta[r.subject_index] + xv_alpha_[o]) -
         log_factorial(z);
}

void Sampler::update_eta(Rng& rng) {
  auto& sc = scales_[slot(Block::Eta)];
  const double root_kappa = std::sqrt(sc.kappa);
  const Eigen::VectorXd af = take(state_.alpha, spec_.fixed_indices);
  for (Eigen::Index i = 0; i < state_.eta.size(); ++i) {
    const double centre = xf_.cols() > 0 ? xf_.row(i).dot(af) : 0.0;
    const double sz = subj_sum_z_[i];
    const double se = subj_sum_exp_[i];
    auto target = [&](double e) {
      const double dev = e - centre;
      return sz * e - std::exp(e) * se - 0.5 * dev * dev / state_.d_beta;
    };
    const double cur = state_.eta[i];
    const double prop = cur + root_kappa * eta_shape_[i] * draw_normal(rng);
    const bool ok = accept_log_ratio(rng, target(prop) - target(cur));
    if (ok) state_.eta[i] = prop;
    sc.record(ok);
  }
  adapt(Block::Eta);
}

void Sampler::update_z(Rng& rng) {
  auto& sc = scales_[slot(Block::Z)];
  for (std::size_t o = 0; o < rows_.size(); ++o) {
    const auto oi = static_cast<Eigen::Index>(o);
    const auto& r = rows_[o];
    const long v = state_.z[o];
    auto [u, log_fwd, log_rev] = propose_z(v, r.y, rng);
    if (u == v) {
      sc.record(true);
      continue;
    }
    const double lp_new_bd = bd_log_pmf_log_rate(r.y, u, log_lambda_[oi]);
    bool ok = false;
    if (lp_new_bd != kNegInf) {
      const double lin = state_.eta[r.subject_index] + xv_alpha_[oi];
      const double cur = bd_lp_[oi] + static_cast<double>(v) * lin - log_factorial(v);
      const double nxt = lp_new_bd + static_cast<double>(u) * lin - log_factorial(u);
      ok = accept_log_ratio(rng, nxt - cur + log_rev - log_fwd);
    }
    if (ok) {
      state_.z[o] = u;
      bd_lp_[oi] = lp_new_bd;
      subj_sum_z_[r.subject_index] += static_cast<double>(u - v);
    }
    sc.record(ok);
  }
}

void Sampler::update_alpha_v(Rng& rng) {
  auto& sc = scales_[slot(Block::AlphaV)];
  const auto nv = xv_.cols();
  if (nv == 0) return;
  Eigen::VectorXd prop_alpha = state_.alpha;
  const double root_kappa = std::sqrt(sc.kappa);
  for (Eigen::Index k = 0; k < nv; ++k) {
    prop_alpha[spec_.varying_indices[static_cast<std::size_t>(k)]] +=
        root_kappa * alpha_v_shape_[k] * draw_normal(rng);
  }
  const Eigen::VectorXd prop_lin = xv_ * take(prop_alpha, spec_.varying_indices);
  const Eigen::VectorXd prop_exp = prop_lin.array().exp().matrix();
  double delta = alpha_log_prior(prop_alpha) - alpha_log_prior(state_.alpha);
  for (std::size_t o = 0; o < rows_.size(); ++o) {
    const auto oi = static_cast<Eigen::Index>(o);
    const double e_eta = std::exp(state_.eta[rows_[o].subject_index]);
    delta += static_cast<double>(state_.z[o]) * (prop_lin[oi] - xv_alpha_[oi]) -
             e_eta * (prop_exp[oi] - exp_xv_[oi]);
  }
  const bool ok = accept_log_ratio(rng, delta);
  if (ok) {
    state_.alpha = prop_alpha;
    xv_alpha_ = prop_lin;
    exp_xv_ = prop_exp;
    subj_sum_exp_.setZero();
    for (std::size_t o = 0; o < rows_.size(); ++o) {
      subj_sum_exp_[rows_[o].subject_index] += exp_xv_[static_cast<Eigen::Index>(o)];
    }
  }
  sc.record(ok);
  adapt(Block::AlphaV);
}

void Sampler::update_alpha_f(Rng& rng) {
  const auto& f = spec_.fixed_indices;
  const auto& v = spec_.varying_indices;
  if (f.empty()) return;
  const Eigen::MatrixXd p_ff = take(prior_prec_, f, f);
  const double inv_d = 1.0 / state_.d_beta;
  const Eigen::MatrixXd prec = p_ff + inv_d * xf_.transpose() * xf_;
  Eigen::VectorXd rhs = inv_d * xf_.transpose() * state_.eta + p_ff * take(prior_.m_alpha, f);
  if (!v.empty()) {
    rhs -= take(prior_prec_, f, v) * (take(state_.alpha, v) - take(prior_.m_alpha, v));
  }
  Eigen::LLT<Eigen::MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success) {
    throw std::logic_error("alpha^(F) conditional precision is not positive definite");
  }
  const Eigen::VectorXd mean = llt.solve(rhs);
  const Eigen::VectorXd draw =
      mean + llt.matrixU().solve(draw_normal_vector(rng, static_cast<Eigen::Index>(f.size())));
  for (std::size_t k = 0; k < f.size(); ++k) state_.alpha[f[k]] = draw[static_cast<Eigen::Index>(k)];
  scales_[slot(Block::AlphaF)].record(true);
}

void Sampler::update_dbeta_inv(Rng& rng) {
  const Eigen::VectorXd b = state_.beta(rows_, subject_begin_, spec_.fixed_indices);
  const double shape = 0.5 * static_cast<double>(b.size()) + prior_.d_beta.shape;
  const double rate = 0.5 * b.squaredNorm() + prior_.d_beta.scale;
  state_.d_beta = 1.0 / draw_gamma_rate(rng, shape, rate);
  scales_[slot(Block::DBeta)].record(true);
}

void Sampler::update_psi(Rng& rng) {
  auto& sc = scales_[slot(Block::Psi)];
  const auto q = w_.cols();
  if (q == 0 || kind_ != ModelKind::BdPrem) return;
  const double root_kappa = std::sqrt(sc.kappa);
  Eigen::VectorXd prop = state_.psi;
  for (Eigen::Index k = 0; k < q; ++k) prop[k] += root_kappa * psi_shape_[k] * draw_normal(rng);

  Eigen::VectorXd prop_ll = w_ * prop;
  if (state_.epsilon.size() > 0) {
    for (std::size_t o = 0; o < rows_.size(); ++o) {
      prop_ll[static_cast<Eigen::Index>(o)] += state_.epsilon[rows_[o].subject_index];
    }
  }
  Eigen::VectorXd prop_bd(prop_ll.size());
  const Eigen::VectorXd dp = prop - prior_.m_psi;
  const Eigen::VectorXd dc = state_.psi - prior_.m_psi;
  double delta = -0.5 * dp.dot(psi_prec_ * dp) + 0.5 * dc.dot(psi_prec_ * dc);
  for (std::size_t o = 0; o < rows_.size(); ++o) {
    const auto oi = static_cast<Eigen::Index>(o);
    prop_bd[oi] = bd_log_pmf_log_rate(rows_[o].y, state_.z[o], prop_ll[oi]);
    delta += prop_bd[oi] - bd_lp_[oi];
  }
  const bool ok = accept_log_ratio(rng, delta);
  if (ok) {
    state_.psi = prop;
    log_lambda_ = prop_ll;
    bd_lp_ = prop_bd;
  }
  sc.record(ok);
  adapt(Block::Psi);
}

void Sampler::update_epsilon(Rng& rng) {
  if (state_.epsilon.size() == 0) return;
  auto& sc = scales_[slot(Block::RateEffect)];
  const double root_kappa = std::sqrt(sc.kappa);
  std::vector<double> prop_bd;
  for (Eigen::Index i = 0; i < state_.epsilon.size(); ++i) {
    const auto lo = static_cast<std::size_t>(subject_begin_[static_cast<std::size_t>(i)]);
    const auto hi = static_cast<std::size_t>(subject_begin_[static_cast<std::size_t>(i) + 1]);
    const double cur = state_.epsilon[i];
    const double prop = cur + root_kappa * eps_shape_[i] * draw_normal(rng);
    const double shift = prop - cur;
    double delta = -0.5 * (prop * prop - cur * cur) / state_.d_epsilon;
    prop_bd.assign(hi - lo, 0.0);
    for (auto o = lo; o < hi; ++o) {
      const auto oi = static_cast<Eigen::Index>(o);
      prop_bd[o - lo] = bd_log_pmf_log_rate(rows_[o].y, state_.z[o], log_lambda_[oi] + shift);
      delta += prop_bd[o - lo] - bd_lp_[oi];
    }
    const bool ok = accept_log_ratio(rng, delta);
    if (ok) {
      state_.epsilon[i] = prop;
      for (auto o = lo; o < hi; ++o) {
        const auto oi = static_cast<Eigen::Index>(o);
        log_lambda_[oi] += shift;
        bd_lp_[oi] = prop_bd[o - lo];
      }
    }
    sc.record(ok);
  }
  adapt(Block::RateEffect);
}

void Sampler::update_depsilon_inv(Rng& rng) {
  if (state_.epsilon.size() == 0) return;
  const auto& ig = *prior_.d_epsilon;
  const double shape = 0.5 * static_cast<double>(state_.epsilon.size()) + ig.shape;
  const double rate = 0.5 * state_.epsilon.squaredNorm() + ig.scale;
  state_.d_epsilon = 1.0 / draw_gamma_rate(rng, shape, rate);
}

Block Sampler::step(Rng& rng) {
  const double u = draw_uniform(rng);
  double acc = 0.0;
  Block chosen = active_.back();
  for (Block b : active_) {
    acc += scan_.at(b);
    if (u < acc) {
      chosen = b;
      break;
    }
  }
  ++selected_[slot(chosen)];
  switch (chosen) {
    case Block::Eta: update_eta(rng); break;
    case Block::Z: update_z(rng); break;
    case Block::AlphaV: update_alpha_v(rng); break;
    case Block::DBeta: update_dbeta_inv(rng); break;
    case Block::AlphaF: update_alpha_f(rng); break;
    case Block::Psi: update_psi(rng); break;
    case Block::RateEffect:
      update_epsilon(rng);
      update_depsilon_inv(rng);
      break;
  }
  return chosen;
}

// --- driver --------------------------------------------------------------------

Trace run_chain(Sampler& sampler, const SamplerConfig& config, Rng& rng,
                const std::vector<std::string>& subject_ids) {
  const auto& rows = sampler.rows();
  const long stored = (config.iterations - config.burn_in) / config.thin;
  const auto p = sampler.state().alpha.size();
  const auto q = sampler.state().psi.size();
  const bool eps_on = sampler.state().epsilon.size() > 0;
  for (int idx : config.z_selected) {
    if (idx < 0 || idx >= static_cast<int>(rows.size())) {
      throw ValidationError("selected observation " + std::to_string(idx) + " is out of range");
    }
  }

  Trace t;
  t.alpha_names = sampler.prior().alpha_names;
  t.psi_names = sampler.prior().psi_names;
  if (q == 0) t.psi_names.clear();
  t.alpha.resize(stored, p);
  t.psi.resize(stored, q);
  t.dbeta.reserve(static_cast<std::size_t>(stored));
  if (eps_on) t.depsilon.reserve(static_cast<std::size_t>(stored));
  t.z_selected = config.z_selected;
  const std::size_t N = rows.size();
  t.z_mean.assign(N, 0.0);
  t.lambda_mean.assign(N, 0.0);
  t.mu_mean.assign(N, 0.0);
  for (const auto& r : rows) {
    const auto i = static_cast<std::size_t>(r.subject_index);
    t.obs_subject.push_back(i < subject_ids.size() ? subject_ids[i] : std::to_string(i + 1));
    t.obs_time.push_back(r.time);
    t.obs_y.push_back(r.y);
  }

  long k = 0;
  for (long m = 1; m <= config.iterations; ++m) {
    sampler.step(rng);
    if (config.freeze_after_burn_in && m == config.burn_in) sampler.set_adaptation(false);
    if (m <= config.burn_in || (m - config.burn_in) % config.thin != 0) continue;
    const auto& s = sampler.state();
    t.alpha.row(k) = s.alpha.transpose();
    if (q > 0) t.psi.row(k) = s.psi.transpose();
    t.dbeta.push_back(s.d_beta);
    if (eps_on) t.depsilon.push_back(s.d_epsilon);
    if (!config.z_selected.empty()) {
      std::vector<long> zs;
      for (int idx : config.z_selected) zs.push_back(s.z[static_cast<std::size_t>(idx)]);
      t.z_draws.push_back(std::move(zs));
    }
    ++k;
    const double inv_k = 1.0 / static_cast<double>(k);
    for (std::size_t o = 0; o < N; ++o) {
      t.z_mean[o] += (static_cast<double>(s.z[o]) - t.z_mean[o]) * inv_k;
      t.lambda_mean[o] += (sampler.lambda(o) - t.lambda_mean[o]) * inv_k;
      t.mu_mean[o] += (sampler.mu(o) - t.mu_mean[o]) * inv_k;
    }
  }

  for (Block b : sampler.active_blocks()) {
    if (b == Block::DBeta || b == Block::AlphaF) continue;
    const auto& sc = sampler.scale(b);
    AdaptDiagnostic d;
    d.block = block_name(b);
    d.iterations = sampler.selections(b);
    d.acceptance = sc.acceptance();
    d.kappa = b == Block::Z ? std::numeric_limits<double>::quiet_NaN() : sc.kappa;
    t.adapt.push_back(d);
  }
  return t;
}

Trace run_chain(const Dataset& data, const PriorSpec& prior, const SamplerConfig& config,
                ModelKind kind, bool rate_random_effect) {
  Sampler sampler(data, prior, config, kind, rate_random_effect);
  Rng rng = make_rng({config.seed});
  return run_chain(sampler, config, rng, data.subject_ids);
}

}  // namespace bdprem
