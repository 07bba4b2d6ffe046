#include "bdprem/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "bdprem/bd_process.hpp"
#include "bdprem/config.hpp"
#include "bdprem/dataset.hpp"
#include "bdprem/error.hpp"
#include "bdprem/mcmc.hpp"
#include "bdprem/priors.hpp"
#include "bdprem/random.hpp"
#include "bdprem/simulation.hpp"
#include "bdprem/summary.hpp"
#include "bdprem/trace.hpp"

namespace bdprem {
namespace fs = std::filesystem;
namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

fs::path resolve(const ConfigFile& cfg, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : cfg.base_dir() / path;
}

PriorSpec load_prior(const ConfigFile& cfg, const DataSchema& schema) {
  const ConfigSection* sec = cfg.find("prior");
  const std::string mode = sec ? sec->get("mode").value_or("table") : "table";
  if (mode == "table") {
    if (sec && sec->has("file")) {
      return parse_prior_tables(ConfigFile::load(resolve(cfg, sec->require("file"))),
                                schema.alpha_names, schema.w_names);
    }
    return parse_prior_tables(cfg, schema.alpha_names, schema.w_names);
  }
  if (mode == "da") {
    const DaPriorData data =
        load_da_prior_data(resolve(cfg, sec->require("prem_data")).string(),
                           resolve(cfg, sec->require("bd_data")).string(), schema.alpha_names,
                           schema.w_names);
    InverseGamma pre;
    pre.shape = sec->get_double("a", pre.shape);
    pre.scale = sec->get_double("b", pre.scale);
    DaSummaryOptions opt;
    opt.iterations = sec->get_long("iterations", opt.iterations);
    opt.burn_in = sec->get_long("burn_in", opt.burn_in);
    opt.thin = sec->get_long("thin", opt.thin);
    opt.seed = static_cast<std::uint64_t>(sec->get_long("seed", static_cast<long>(opt.seed)));
    opt.psi_pre_prior_sd = sec->get_double("psi_pre_prior_sd", opt.psi_pre_prior_sd);
    PriorSpec p = summarize_da_prior(data, pre, schema.alpha_names, schema.w_names, opt);
    if (const auto* eps = cfg.find("depsilon")) {
      InverseGamma ig;
      ig.shape = parse_double(eps->require("a"), "[depsilon] a");
      ig.scale = parse_double(eps->require("b"), "[depsilon] b");
      p.d_epsilon = ig;
    }
    return p;
  }
  throw ValidationError("[prior] mode must be 'table' or 'da'");
}

SamplerConfig sampler_config(const ConfigFile& cfg) {
  SamplerConfig sc;
  const ConfigSection* sec = cfg.find("sampler");
  if (!sec) return sc;
  sc.iterations = sec->get_long("iterations", sc.iterations);
  sc.burn_in = sec->get_long("burn_in", sc.burn_in);
  sc.thin = sec->get_long("thin", sc.thin);
  sc.seed = static_cast<std::uint64_t>(sec->get_long("seed", static_cast<long>(sc.seed)));
  sc.target_scalar = sec->get_double("target_scalar", sc.target_scalar);
  sc.target_vector = sec->get_double("target_vector", sc.target_vector);
  sc.initial_kappa = sec->get_double("initial_kappa", sc.initial_kappa);
  sc.freeze_after_burn_in = sec->get_bool("freeze_after_burn_in", sc.freeze_after_burn_in);
  const std::string t = sec->get("t").value_or("sqrt");
  if (t == "sqrt") {
    sc.t_transform = TTransform::Sqrt;
  } else if (t == "linear") {
    sc.t_transform = TTransform::Linear;
  } else {
    throw ValidationError("[sampler] t must be 'sqrt' or 'linear'");
  }
  for (Block b : kAllBlocks) {
    const std::string key = std::string("scan_") + block_name(b);
    if (sec->has(key)) sc.scan[b] = sec->get_double(key, 0.0);
  }
  for (const auto& s : sec->get_list("select")) {
    sc.z_selected.push_back(static_cast<int>(parse_long(s, "[sampler] select")) - 1);
  }
  return sc;
}

int cmd_fit(const std::string& data_flag, const std::string& config_path,
            std::optional<long> iterations, std::optional<long> burn_in, std::optional<long> thin,
            std::optional<long> seed, const std::string& out_flag, const std::vector<int>& select,
            std::ostream& out) {
  const ConfigFile cfg = ConfigFile::load(config_path);
  const ConfigSection& model = cfg.section("model");
  const DataSchema schema = DataSchema::from_config(model);
  const std::string kind_name = model.get("kind").value_or("bdprem");
  ModelKind kind;
  if (kind_name == "bdprem") {
    kind = ModelKind::BdPrem;
  } else if (kind_name == "prem") {
    kind = ModelKind::Prem;
  } else {
    throw ValidationError("[model] kind must be 'bdprem' or 'prem'");
  }
  const bool rate_effect = model.get_bool("rate_random_effect", false);

  fs::path data_path;
  if (!data_flag.empty()) {
    data_path = data_flag;
  } else {
    data_path = resolve(cfg, cfg.section("data").require("file"));
  }
  const Dataset data = load_dataset(data_path, schema);

  SamplerConfig sc = sampler_config(cfg);
  if (iterations) sc.iterations = *iterations;
  if (burn_in) sc.burn_in = *burn_in;
  if (thin) sc.thin = *thin;
  if (seed) {
    if (*seed < 0) throw ValidationError("--seed must be non-negative");
    sc.seed = static_cast<std::uint64_t>(*seed);
  }
  for (int s : select) sc.z_selected.push_back(s - 1);

  fs::path out_dir;
  if (!out_flag.empty()) {
    out_dir = out_flag;
  } else if (const auto* o = cfg.find("output"); o && o->has("dir")) {
    out_dir = resolve(cfg, o->require("dir"));
  } else {
    throw ValidationError("no output directory: pass --out or set [output] dir");
  }

  const PriorSpec prior = load_prior(cfg, schema);
  const Trace trace = run_chain(data, prior, sc, kind, rate_effect);
  write_trace(out_dir, trace);
  const auto summary = summarize_trace(trace, 0.95);
  auto sout = open_out(out_dir / "summary.csv");
  write_summary(sout, summary, 0.95);
  out << "stored " << trace.samples() << " samples in " << out_dir.string() << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian birth-death reporting-error model for longitudinal counts", "bdprem"};
  app.require_subcommand(1);

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a model to a data file");
  std::string fit_data, fit_config, fit_out;
  std::optional<long> fit_iter, fit_burn, fit_thin, fit_seed;
  std::vector<int> fit_select;
  fit->add_option("--data", fit_data, "Long-format CSV (overrides [data] file)");
  fit->add_option("--config", fit_config, "Fit configuration")->required();
  fit->add_option("--iterations", fit_iter);
  fit->add_option("--burn-in", fit_burn);
  fit->add_option("--thin", fit_thin);
  fit->add_option("--seed", fit_seed);
  fit->add_option("--out", fit_out, "Output directory (overrides [output] dir)");
  fit->add_option("--select", fit_select, "1-based observation rows whose Z draws are kept");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run a simulation study");
  std::string sim_scenario, sim_out;
  std::optional<int> sim_reps;
  std::optional<long> sim_iter, sim_seed;
  unsigned sim_threads = 0;
  sim->add_option("--scenario", sim_scenario)->required();
  sim->add_option("--replicates", sim_reps);
  sim->add_option("--iterations", sim_iter);
  sim->add_option("--seed", sim_seed);
  sim->add_option("--threads", sim_threads, "Worker threads (0: all cores)");
  sim->add_option("--out", sim_out)->required();

  // bd-pmf
  auto* pmf = app.add_subcommand("bd-pmf", "Print the reporting distribution P(y | z, lambda)");
  long pmf_z = 0, pmf_max_y = 0;
  double pmf_lambda = 1.0;
  pmf->add_option("--z", pmf_z)->required();
  pmf->add_option("--lambda", pmf_lambda)->required();
  pmf->add_option("--max-y", pmf_max_y)->required();

  // summarize
  auto* summ = app.add_subcommand("summarize", "Posterior means, SDs and intervals of a trace");
  std::string summ_dir;
  double summ_level = 0.95;
  summ->add_option("--trace-dir", summ_dir)->required();
  summ->add_option("--level", summ_level);

  // mrse
  auto* mrse = app.add_subcommand("mrse", "Residual decomposition by reporting-rate bin");
  std::string mrse_dir, mrse_data;
  std::vector<double> mrse_breaks{0.05, 1.0};
  mrse->add_option("--trace-dir", mrse_dir)->required();
  mrse->add_option("--data", mrse_data)->required();
  mrse->add_option("--breaks", mrse_breaks, "Increasing lambda thresholds");

  // predict
  auto* pred = app.add_subcommand("predict", "Group trajectories of exp(x'alpha)");
  std::string pred_dir, pred_profile;
  double pred_level = 0.95;
  pred->add_option("--trace-dir", pred_dir)->required();
  pred->add_option("--profile", pred_profile)->required();
  pred->add_option("--level", pred_level);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*fit) {
      return cmd_fit(fit_data, fit_config, fit_iter, fit_burn, fit_thin, fit_seed, fit_out,
                     fit_select, out);
    }
    if (*sim) {
      Scenario sc = load_scenario(sim_scenario);
      if (sim_reps) sc.truth.replicates = *sim_reps;
      if (sim_seed) {
        if (*sim_seed < 0) throw ValidationError("--seed must be non-negative");
        sc.seed = static_cast<std::uint64_t>(*sim_seed);
      }
      if (sim_iter) {
        for (auto& f : sc.fits) f.sampler.iterations = *sim_iter;
      }
      Rng design_rng = make_rng({sc.design_seed});
      const Dataset design = trial_design(sc.design, design_rng);
      StudyOptions opt;
      opt.seed = sc.seed;
      opt.threads = sim_threads;
      opt.out_dir = fs::path(sim_out);
      fs::create_directories(sim_out);
      const StudyReport report = replicate_study(sc.truth, design, sc.fits, opt);
      auto rep = open_out(fs::path(sim_out) / "study_report.csv");
      write_study_report(rep, report.rows);
      auto est = open_out(fs::path(sim_out) / "replicate_estimates.csv");
      write_replicate_estimates(est, report.fits);
      out << "wrote " << (fs::path(sim_out) / "study_report.csv").string() << '\n';
      return 0;
    }
    if (*pmf) {
      const BdParams params{pmf_z, pmf_lambda};
      params.validate();
      if (pmf_max_y < 0) throw ValidationError("--max-y must be >= 0");
      out << "y,probability\n";
      for (long y = 0; y <= pmf_max_y; ++y) {
        out << y << ',' << format_double(bd_pmf(y, params)) << '\n';
      }
      return 0;
    }
    if (*summ) {
      const Trace t = read_trace(summ_dir);
      write_summary(out, summarize_trace(t, summ_level), summ_level);
      return 0;
    }
    if (*mrse) {
      const Trace t = read_trace(mrse_dir);
      const Dataset data = load_dataset(mrse_data, DataSchema{});
      if (data.n_obs() != static_cast<int>(t.obs_y.size())) {
        throw ValidationError("data has " + std::to_string(data.n_obs()) +
                              " rows but the trace has " + std::to_string(t.obs_y.size()));
      }
      std::vector<long> y;
      for (const auto& r : data.rows) y.push_back(r.y);
      if (y != t.obs_y) throw ValidationError("data counts do not match the fitted trace");
      write_mrse(out, mrse_decomposition(y, t.z_mean, t.mu_mean, t.lambda_mean, mrse_breaks));
      return 0;
    }
    if (*pred) {
      const Trace t = read_trace(pred_dir);
      const auto profile = load_profile(pred_profile, t.alpha_names);
      write_predictions(out, predict_group_trajectory(t.alpha, profile, pred_level));
      return 0;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace bdprem
