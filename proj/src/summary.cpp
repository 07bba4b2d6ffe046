#include "bdprem/summary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bdprem/config.hpp"
#include "bdprem/csv.hpp"
#include "bdprem/error.hpp"

namespace bdprem {
namespace {

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("interval level must lie in (0, 1)");
}

}  // namespace

double quantile_type7(std::vector<double> values, double prob) {
  if (values.empty()) throw ValidationError("quantile of an empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw std::domain_error("quantile probability outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<ParameterSummary> summarize_samples(const std::vector<std::string>& names,
                                                const Eigen::MatrixXd& samples, double level) {
  check_level(level);
  if (samples.rows() < 2) throw ValidationError("summaries need at least two stored samples");
  if (static_cast<Eigen::Index>(names.size()) != samples.cols()) {
    throw std::invalid_argument("one name per sample column is required");
  }
  const double tail = 0.5 * (1.0 - level);
  std::vector<ParameterSummary> out;
  for (Eigen::Index c = 0; c < samples.cols(); ++c) {
    std::vector<double> v(static_cast<std::size_t>(samples.rows()));
    for (Eigen::Index r = 0; r < samples.rows(); ++r) v[static_cast<std::size_t>(r)] = samples(r, c);
    // sort first so the result does not depend on the order of the draws
    std::sort(v.begin(), v.end());
    ParameterSummary s;
    s.name = names[static_cast<std::size_t>(c)];
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    s.lo = quantile_type7(v, tail);
    s.hi = quantile_type7(v, 1.0 - tail);
    s.significant = s.lo > 0.0 || s.hi < 0.0;
    out.push_back(s);
  }
  return out;
}

std::vector<ParameterSummary> summarize_trace(const Trace& trace, double level) {
  auto out = summarize_samples(trace.alpha_names, trace.alpha, level);
  if (!trace.psi_names.empty()) {
    auto psi = summarize_samples(trace.psi_names, trace.psi, level);
    for (auto& s : psi) s.name = "psi:" + s.name;
    out.insert(out.end(), psi.begin(), psi.end());
  }
  auto column = [](const std::vector<double>& v) {
    return Eigen::Map<const Eigen::MatrixXd>(v.data(), static_cast<Eigen::Index>(v.size()), 1);
  };
  auto d = summarize_samples({"D_beta"}, column(trace.dbeta), level);
  out.insert(out.end(), d.begin(), d.end());
  if (!trace.depsilon.empty()) {
    auto e = summarize_samples({"D_epsilon"}, column(trace.depsilon), level);
    out.insert(out.end(), e.begin(), e.end());
  }
  return out;
}

void write_summary(std::ostream& out, const std::vector<ParameterSummary>& rows, double level) {
  const std::string pct = format_double(100.0 * level);
  out << "parameter,mean,sd,lo" << pct << ",hi" << pct << ",significant\n";
  for (const auto& s : rows) {
    out << s.name << ',' << format_double(s.mean) << ',' << format_double(s.sd) << ','
        << format_double(s.lo) << ',' << format_double(s.hi) << ',' << (s.significant ? 1 : 0)
        << '\n';
  }
}

std::vector<MrseRow> mrse_decomposition(const std::vector<long>& y,
                                        const std::vector<double>& z_mean,
                                        const std::vector<double>& mu_mean,
                                        const std::vector<double>& lambda_mean,
                                        const std::vector<double>& breaks) {
  const std::size_t n = y.size();
  if (z_mean.size() != n || mu_mean.size() != n || lambda_mean.size() != n) {
    throw std::invalid_argument("mrse_decomposition: inputs differ in length");
  }
  if (!std::is_sorted(breaks.begin(), breaks.end()) ||
      std::adjacent_find(breaks.begin(), breaks.end()) != breaks.end()) {
    throw ValidationError("lambda breaks must be strictly increasing");
  }
  std::vector<MrseRow> rows(breaks.size() + 1);
  for (std::size_t b = 0; b < rows.size(); ++b) {
    rows[b].lambda_lo = b == 0 ? -std::numeric_limits<double>::infinity() : breaks[b - 1];
    rows[b].lambda_hi = b == breaks.size() ? std::numeric_limits<double>::infinity() : breaks[b];
  }
  for (std::size_t o = 0; o < n; ++o) {
    const auto b = static_cast<std::size_t>(
        std::upper_bound(breaks.begin(), breaks.end(), lambda_mean[o]) - breaks.begin());
    auto& r = rows[b];
    const double meas = static_cast<double>(y[o]) - z_mean[o];
    const double samp = z_mean[o] - mu_mean[o];
    const double total = static_cast<double>(y[o]) - mu_mean[o];
    ++r.m;
    r.mrse += total * total;
    r.measurement += meas * meas;
    r.sampling += samp * samp;
    r.cross += 2.0 * meas * samp;
  }
  for (auto& r : rows) {
    if (r.m == 0) continue;
    const double m = static_cast<double>(r.m);
    r.mrse /= m;
    r.measurement /= m;
    r.sampling /= m;
    r.cross /= m;
  }
  return rows;
}

std::vector<MrseRow> mrse_decomposition(const Trace& trace, const std::vector<double>& breaks) {
  return mrse_decomposition(trace.obs_y, trace.z_mean, trace.mu_mean, trace.lambda_mean, breaks);
}

void write_mrse(std::ostream& out, const std::vector<MrseRow>& rows) {
  out << "lambda_lo,lambda_hi,m,mrse,measurement,sampling,cross,measurement_frac,sampling_frac,"
         "cross_frac\n";
  for (const auto& r : rows) {
    out << format_double(r.lambda_lo) << ',' << format_double(r.lambda_hi) << ',' << r.m;
    if (r.m == 0) {
      out << ",,,,,,,\n";
      continue;
    }
    auto frac = [&](double v) { return r.mrse > 0.0 ? format_double(v / r.mrse) : std::string(); };
    out << ',' << format_double(r.mrse) << ',' << format_double(r.measurement) << ','
        << format_double(r.sampling) << ',' << format_double(r.cross) << ',' << frac(r.measurement)
        << ',' << frac(r.sampling) << ',' << frac(r.cross) << '\n';
  }
}

std::vector<ProfileRow> load_profile(const std::filesystem::path& path,
                                     const std::vector<std::string>& alpha_names) {
  const CsvTable t = read_csv(path);
  const auto cg = t.column("group");
  const auto cm = t.column("month");
  std::vector<long> cols;
  for (const auto& n : alpha_names) {
    auto it = std::find(t.header.begin(), t.header.end(), n);
    if (it != t.header.end()) {
      cols.push_back(it - t.header.begin());
    } else if (n == "Intercept") {
      cols.push_back(-1);
    } else {
      throw ValidationError(t.source + ": profile is missing column '" + n + "'");
    }
  }
  std::vector<ProfileRow> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    ProfileRow p;
    p.group = t.rows[r][cg];
    p.month = t.number(r, cm);
    p.x.resize(static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) {
      p.x[static_cast<Eigen::Index>(k)] =
          cols[k] < 0 ? 1.0 : t.number(r, static_cast<std::size_t>(cols[k]));
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PredictionRow> predict_group_trajectory(const Eigen::MatrixXd& alpha_samples,
                                                    const std::vector<ProfileRow>& profile,
                                                    double level) {
  check_level(level);
  if (alpha_samples.rows() < 1) throw ValidationError("prediction needs at least one sample");
  const double tail = 0.5 * (1.0 - level);
  std::vector<PredictionRow> out;
  for (const auto& p : profile) {
    if (p.x.size() != alpha_samples.cols()) {
      throw ValidationError("profile row for group " + p.group + " has " +
                            std::to_string(p.x.size()) + " covariates, trace has " +
                            std::to_string(alpha_samples.cols()));
    }
    const Eigen::VectorXd mu = (alpha_samples * p.x).array().exp().matrix();
    std::vector<double> v(mu.data(), mu.data() + mu.size());
    std::sort(v.begin(), v.end());
    PredictionRow row;
    row.group = p.group;
    row.month = p.month;
    row.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    row.lo = quantile_type7(v, tail);
    row.hi = quantile_type7(v, 1.0 - tail);
    out.push_back(row);
  }
  return out;
}

void write_predictions(std::ostream& out, const std::vector<PredictionRow>& rows) {
  out << "group,month,mean,lo,hi\n";
  for (const auto& r : rows) {
    out << r.group << ',' << format_double(r.month) << ',' << format_double(r.mean) << ','
        << format_double(r.lo) << ',' << format_double(r.hi) << '\n';
  }
}

}  // namespace bdprem
