#include "bdprem/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

#include "bdprem/bd_process.hpp"
#include "bdprem/error.hpp"
#include "bdprem/random.hpp"
#include "bdprem/summary.hpp"
#include "bdprem/trace.hpp"

namespace bdprem {
namespace fs = std::filesystem;

void SimulationTruth::validate() const {
  if (replicates < 1) throw ValidationError("a simulation study needs at least one replicate");
  if (!(d_beta_true > 0.0)) throw ValidationError("true D_beta must be positive");
  if (n_subjects < 1) throw ValidationError("a simulation study needs at least one subject");
  if (!alpha_true.allFinite() || !psi_true.allFinite()) {
    throw ValidationError("true coefficients must be finite");
  }
}

GeneratedData generate_dataset(const SimulationTruth& truth, const Dataset& design, Rng& rng) {
  truth.validate();
  if (truth.alpha_true.size() != static_cast<Eigen::Index>(design.schema.alpha_names.size())) {
    throw ValidationError("true alpha has the wrong length for the design");
  }
  const bool bd = truth.generator == Generator::BdPrem;
  if (bd && truth.psi_true.size() != static_cast<Eigen::Index>(design.schema.w_names.size())) {
    throw ValidationError("true psi has the wrong length for the design");
  }
  GeneratedData g;
  g.data = design;
  g.beta.resize(design.n_subjects());
  const double sd = std::sqrt(truth.d_beta_true);
  for (Eigen::Index i = 0; i < g.beta.size(); ++i) g.beta[i] = sd * draw_normal(rng);
  g.z.resize(design.rows.size());
  for (std::size_t o = 0; o < design.rows.size(); ++o) {
    auto& obs = g.data.rows[o];
    const double mu = std::exp(obs.x.dot(truth.alpha_true) + g.beta[obs.subject_index]);
    g.z[o] = std::poisson_distribution<long>(mu)(rng);
    obs.y = bd ? bd_simulate({g.z[o], std::exp(obs.w.dot(truth.psi_true))}, rng) : g.z[o];
  }
  return g;
}

std::map<std::string, double> truth_by_name(const SimulationTruth& truth, const DataSchema& schema) {
  std::map<std::string, double> out;
  for (std::size_t k = 0; k < schema.alpha_names.size(); ++k) {
    out[schema.alpha_names[k]] = truth.alpha_true[static_cast<Eigen::Index>(k)];
  }
  if (truth.psi_true.size() == static_cast<Eigen::Index>(schema.w_names.size())) {
    for (std::size_t k = 0; k < schema.w_names.size(); ++k) {
      out["psi:" + schema.w_names[k]] = truth.psi_true[static_cast<Eigen::Index>(k)];
    }
  }
  out["D_beta"] = truth.d_beta_true;
  return out;
}

std::vector<StudyRow> aggregate_report(std::vector<ReplicateFit> fits,
                                       const std::map<std::string, double>& truth) {
  std::sort(fits.begin(), fits.end(), [](const ReplicateFit& a, const ReplicateFit& b) {
    return a.model != b.model ? a.model < b.model : a.replicate < b.replicate;
  });
  std::vector<StudyRow> rows;
  std::size_t begin = 0;
  while (begin < fits.size()) {
    std::size_t end = begin;
    while (end < fits.size() && fits[end].model == fits[begin].model) ++end;
    const auto& ref = fits[begin];
    const double R = static_cast<double>(end - begin);
    for (std::size_t k = 0; k < ref.names.size(); ++k) {
      auto t = truth.find(ref.names[k]);
      if (t == truth.end()) continue;
      const auto kk = static_cast<Eigen::Index>(k);
      StudyRow row;
      row.parameter = ref.names[k];
      row.model = ref.model;
      row.truth = t->second;
      double mean = 0.0;
      for (auto f = begin; f < end; ++f) mean += fits[f].mean[kk];
      mean /= R;
      for (auto f = begin; f < end; ++f) {
        const double e = fits[f].mean[kk];
        row.mse += (e - row.truth) * (e - row.truth);
        row.var += (e - mean) * (e - mean);
        row.avg_var += fits[f].var[kk];
        if (fits[f].lo[kk] <= row.truth && row.truth <= fits[f].hi[kk]) row.coverage += 1.0;
      }
      row.mse /= R;
      row.var /= R;
      row.avg_var /= R;
      row.coverage /= R;
      row.bias = mean - row.truth;
      row.bias_t = row.var > 0.0 ? row.bias / std::sqrt(row.var / R)
                                 : std::numeric_limits<double>::quiet_NaN();
      rows.push_back(row);
    }
    begin = end;
  }
  return rows;
}

namespace {

ReplicateFit to_fit(const Trace& trace, int replicate, const std::string& model) {
  ReplicateFit f;
  f.replicate = replicate;
  f.model = model;
  const auto summary = summarize_trace(trace, 0.95);
  const auto n = static_cast<Eigen::Index>(summary.size());
  f.mean.resize(n);
  f.var.resize(n);
  f.lo.resize(n);
  f.hi.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& s = summary[static_cast<std::size_t>(k)];
    f.names.push_back(s.name);
    f.mean[k] = s.mean;
    f.var[k] = s.sd * s.sd;
    f.lo[k] = s.lo;
    f.hi[k] = s.hi;
  }
  return f;
}

std::string replicate_dir(int r) {
  std::string s = std::to_string(r + 1);
  return "rep_" + std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

}  // namespace

StudyReport replicate_study(const SimulationTruth& truth, const Dataset& design,
                            const std::vector<FitSpec>& fits, const StudyOptions& options) {
  truth.validate();
  if (fits.empty()) throw ValidationError("a simulation study needs at least one fitted model");
  const int R = truth.replicates;
  std::vector<std::vector<ReplicateFit>> results(static_cast<std::size_t>(R));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (int r = next++; r < R; r = next++) {
      try {
        Rng data_rng = make_rng({options.seed, static_cast<std::uint64_t>(r), 0});
        GeneratedData g = generate_dataset(truth, design, data_rng);
        std::optional<fs::path> rep_dir;
        if (options.out_dir) {
          rep_dir = *options.out_dir / replicate_dir(r);
          fs::create_directories(*rep_dir);
          save_dataset(*rep_dir / "data.csv", g.data);
        }
        for (std::size_t k = 0; k < fits.size(); ++k) {
          SamplerConfig cfg = fits[k].sampler;
          Rng seed_rng = make_rng({options.seed, static_cast<std::uint64_t>(r), k + 1});
          cfg.seed = seed_rng();
          const Trace trace = run_chain(g.data, fits[k].prior, cfg, fits[k].kind);
          if (rep_dir) write_trace(*rep_dir / fits[k].label, trace);
          results[static_cast<std::size_t>(r)].push_back(to_fit(trace, r, fits[k].label));
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = R;
      }
    }
  };

  unsigned n_threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  n_threads = std::clamp<unsigned>(n_threads, 1, static_cast<unsigned>(R));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  StudyReport report;
  for (auto& v : results) report.fits.insert(report.fits.end(), v.begin(), v.end());
  report.rows = aggregate_report(report.fits, truth_by_name(truth, design.schema));
  return report;
}

void write_study_report(std::ostream& out, const std::vector<StudyRow>& rows) {
  out << "parameter,model,truth,mse,bias,var,avg_var,coverage,bias_t\n";
  for (const auto& r : rows) {
    out << r.parameter << ',' << r.model << ',' << format_double(r.truth) << ','
        << format_double(r.mse) << ',' << format_double(r.bias) << ',' << format_double(r.var)
        << ',' << format_double(r.avg_var) << ',' << format_double(r.coverage) << ','
        << format_double(r.bias_t) << '\n';
  }
}

void write_replicate_estimates(std::ostream& out, const std::vector<ReplicateFit>& fits) {
  out << "replicate,model,parameter,mean,var,lo,hi\n";
  for (const auto& f : fits) {
    for (std::size_t k = 0; k < f.names.size(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      out << f.replicate + 1 << ',' << f.model << ',' << f.names[k] << ','
          << format_double(f.mean[kk]) << ',' << format_double(f.var[kk]) << ','
          << format_double(f.lo[kk]) << ',' << format_double(f.hi[kk]) << '\n';
    }
  }
}

namespace {

Eigen::VectorXd read_truth_rows(const ConfigSection& sec, const std::vector<std::string>& names) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(names.size()));
  std::vector<bool> seen(names.size(), false);
  for (const auto& row : sec.rows) {
    const std::string where = "[" + sec.name + "] line " + std::to_string(row.line);
    if (row.fields.size() != 2) throw ValidationError(where + ": expected 'name, value'");
    auto it = std::find(names.begin(), names.end(), row.fields[0]);
    if (it == names.end()) throw ValidationError(where + ": unknown coefficient '" + row.fields[0] + "'");
    const auto k = static_cast<std::size_t>(it - names.begin());
    if (seen[k]) throw ValidationError(where + ": coefficient listed twice");
    seen[k] = true;
    v[static_cast<Eigen::Index>(k)] = parse_double(row.fields[1], where);
  }
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (!seen[k]) throw ValidationError("[" + sec.name + "] has no row for '" + names[k] + "'");
  }
  return v;
}

std::uint64_t read_seed(const ConfigSection& sec, std::uint64_t fallback) {
  const long s = sec.get_long("seed", static_cast<long>(fallback));
  if (s < 0) throw ValidationError("[" + sec.name + "] seed must be non-negative");
  return static_cast<std::uint64_t>(s);
}

}  // namespace

Scenario load_scenario(const fs::path& path) {
  const ConfigFile cfg = ConfigFile::load(path);
  Scenario sc;

  const auto& design = cfg.section("design");
  sc.design.n_subjects = static_cast<int>(design.get_long("n_subjects", sc.design.n_subjects));
  sc.design.retention = design.get_double("retention", sc.design.retention);
  sc.design.p_idu = design.get_double("p_idu", sc.design.p_idu);
  sc.design.p_msm = design.get_double("p_msm", sc.design.p_msm);
  sc.design.p_casual = design.get_double("p_casual", sc.design.p_casual);
  sc.design.p_trade = design.get_double("p_trade", sc.design.p_trade);
  sc.design_seed = read_seed(design, sc.design_seed);

  const DataSchema schema = trial_schema();
  const auto& truth = cfg.section("truth");
  const std::string gen = truth.get("generator").value_or("bdprem");
  if (gen == "bdprem") {
    sc.truth.generator = Generator::BdPrem;
  } else if (gen == "prem") {
    sc.truth.generator = Generator::Prem;
  } else {
    throw ValidationError(cfg.source() + ": generator must be bdprem or prem");
  }
  sc.truth.d_beta_true = truth.get_double("d_beta", sc.truth.d_beta_true);
  sc.truth.replicates = static_cast<int>(truth.get_long("replicates", 1));
  sc.truth.n_subjects = sc.design.n_subjects;
  sc.truth.alpha_true = read_truth_rows(cfg.section("alpha_truth"), schema.alpha_names);
  if (sc.truth.generator == Generator::BdPrem || cfg.has_section("psi_truth")) {
    sc.truth.psi_true = read_truth_rows(cfg.section("psi_truth"), schema.w_names);
  }
  sc.truth.validate();

  const auto& fit = cfg.section("fit");
  const fs::path prior_path = cfg.base_dir() / fit.require("prior");
  const PriorSpec prior =
      parse_prior_tables(ConfigFile::load(prior_path), schema.alpha_names, schema.w_names);
  SamplerConfig base;
  base.iterations = fit.get_long("iterations", base.iterations);
  base.burn_in = fit.get_long("burn_in", base.burn_in);
  base.thin = fit.get_long("thin", base.thin);
  sc.seed = read_seed(fit, sc.seed);
  const auto models = fit.has("models") ? fit.get_list("models") : std::vector<std::string>{"bdprem"};
  for (const auto& m : models) {
    FitSpec f;
    f.label = m;
    if (m == "bdprem") {
      f.kind = ModelKind::BdPrem;
    } else if (m == "prem") {
      f.kind = ModelKind::Prem;
    } else {
      throw ValidationError(cfg.source() + ": unknown model '" + m + "'");
    }
    f.prior = prior;
    f.sampler = base;
    sc.fits.push_back(std::move(f));
  }
  return sc;
}

}  // namespace bdprem
