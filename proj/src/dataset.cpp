#include "bdprem/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <unordered_map>

#include "bdprem/csv.hpp"
#include "bdprem/error.hpp"

namespace bdprem {
namespace {

constexpr const char* kIntercept = "Intercept";

// Column position in the covariate table, or -1 for the implicit intercept.
int resolve(const std::vector<std::string>& columns, const std::string& name,
            const std::string& source) {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it != columns.end()) return static_cast<int>(it - columns.begin());
  if (name == kIntercept) return -1;
  throw ValidationError(source + ": missing column '" + name + "'");
}

Eigen::VectorXd gather(const std::vector<double>& values, const std::vector<int>& cols) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    v[static_cast<Eigen::Index>(k)] = cols[k] < 0 ? 1.0 : values[static_cast<std::size_t>(cols[k])];
  }
  return v;
}

}  // namespace

DataSchema DataSchema::from_config(const ConfigSection& sec) {
  DataSchema s;
  s.alpha_names = sec.get_list("alpha");
  if (sec.has("alpha_fixed")) s.alpha_fixed = sec.get_list("alpha_fixed");
  if (sec.has("psi")) s.w_names = sec.get_list("psi");
  for (const auto& f : s.alpha_fixed) {
    if (std::find(s.alpha_names.begin(), s.alpha_names.end(), f) == s.alpha_names.end()) {
      throw ValidationError("[" + sec.name + "] alpha_fixed names '" + f + "' which is not in alpha");
    }
  }
  return s;
}

ModelSpec Dataset::model_spec(bool rate_random_effect) const {
  ModelSpec spec;
  spec.p = static_cast<int>(schema.alpha_names.size());
  spec.r = 1;
  spec.q = static_cast<int>(schema.w_names.size());
  for (int k = 0; k < spec.p; ++k) {
    const auto& name = schema.alpha_names[static_cast<std::size_t>(k)];
    const bool fixed = std::find(schema.alpha_fixed.begin(), schema.alpha_fixed.end(), name) !=
                       schema.alpha_fixed.end();
    (fixed ? spec.fixed_indices : spec.varying_indices).push_back(k);
  }
  spec.use_rate_random_effect = rate_random_effect;
  spec.validate();
  return spec;
}

void Dataset::rebuild_design() {
  std::vector<int> xcols, wcols;
  for (const auto& n : schema.alpha_names) xcols.push_back(resolve(covariate_columns, n, "dataset"));
  for (const auto& n : schema.w_names) wcols.push_back(resolve(covariate_columns, n, "dataset"));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    rows[r].x = gather(covariates[r], xcols);
    rows[r].w = gather(covariates[r], wcols);
    rows[r].h = Eigen::VectorXd::Ones(1);
  }
}

Dataset parse_dataset(std::istream& in, const std::string& source, const DataSchema& schema) {
  const CsvTable t = parse_csv(in, source);
  const std::size_t sid = t.column("subject_id");
  const std::size_t tcol = t.column("time");
  const std::size_t ycol = t.column("y");
  if (sid != 0 || tcol != 1 || ycol != 2) {
    throw ValidationError(source + ": the first columns must be subject_id,time,y");
  }

  Dataset d;
  d.schema = schema;
  d.covariate_columns.assign(t.header.begin() + 3, t.header.end());
  for (const auto& n : schema.alpha_names) resolve(d.covariate_columns, n, source);
  for (const auto& n : schema.w_names) resolve(d.covariate_columns, n, source);

  struct Record {
    int subject;
    double time;
    long y;
    std::vector<double> cov;
    int line;
  };
  std::vector<Record> records;
  std::unordered_map<std::string, int> subject_of;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    const std::string where = source + ":" + std::to_string(t.lines[r]);
    Record rec;
    rec.line = t.lines[r];
    auto [it, inserted] = subject_of.emplace(f[sid], static_cast<int>(d.subject_ids.size()));
    if (inserted) d.subject_ids.push_back(f[sid]);
    rec.subject = it->second;
    rec.time = parse_double(f[tcol], where + " column 'time'");
    rec.y = parse_long(f[ycol], where + " column 'y'");
    if (rec.y < 0) throw ValidationError(where + " column 'y': negative count " + f[ycol]);
    rec.cov.reserve(d.covariate_columns.size());
    for (std::size_t c = 3; c < f.size(); ++c) rec.cov.push_back(t.number(r, c));
    records.push_back(std::move(rec));
  }
  std::stable_sort(records.begin(), records.end(), [](const Record& a, const Record& b) {
    return a.subject != b.subject ? a.subject < b.subject : a.time < b.time;
  });

  std::vector<int> fixed_cols;
  for (const auto& n : schema.alpha_fixed) fixed_cols.push_back(resolve(d.covariate_columns, n, source));

  d.subject_begin.assign(d.subject_ids.size() + 1, 0);
  for (std::size_t r = 0; r < records.size(); ++r) {
    auto& rec = records[r];
    const bool first = r == 0 || records[r - 1].subject != rec.subject;
    if (first) {
      d.subject_begin[static_cast<std::size_t>(rec.subject)] = static_cast<int>(r);
    } else {
      const auto& head = d.covariates[static_cast<std::size_t>(
          d.subject_begin[static_cast<std::size_t>(rec.subject)])];
      for (std::size_t k = 0; k < fixed_cols.size(); ++k) {
        const int c = fixed_cols[k];
        if (c >= 0 && rec.cov[static_cast<std::size_t>(c)] != head[static_cast<std::size_t>(c)]) {
          throw ValidationError(source + ":" + std::to_string(rec.line) + " column '" +
                                schema.alpha_fixed[k] + "': time-fixed covariate changes within subject " +
                                d.subject_ids[static_cast<std::size_t>(rec.subject)]);
        }
      }
    }
    ObservationDesign obs;
    obs.time = rec.time;
    obs.y = rec.y;
    obs.subject_index = rec.subject;
    d.rows.push_back(std::move(obs));
    d.covariates.push_back(std::move(rec.cov));
  }
  d.subject_begin.back() = static_cast<int>(records.size());
  if (d.rows.empty()) throw ValidationError(source + ": no observations");
  d.rebuild_design();
  return d;
}

Dataset load_dataset(const std::filesystem::path& path, const DataSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return parse_dataset(in, path.string(), schema);
}

void write_dataset(std::ostream& out, const Dataset& data) {
  out << "subject_id,time,y";
  for (const auto& c : data.covariate_columns) out << ',' << c;
  out << '\n';
  for (std::size_t r = 0; r < data.rows.size(); ++r) {
    const auto& obs = data.rows[r];
    out << data.subject_ids[static_cast<std::size_t>(obs.subject_index)] << ','
        << format_double(obs.time) << ',' << obs.y;
    for (double v : data.covariates[r]) out << ',' << format_double(v);
    out << '\n';
  }
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_dataset(out, data);
}

DataSchema trial_schema() {
  DataSchema s;
  s.alpha_names = {"Intercept", "IDU",     "MSM",     "CASUAL",  "TRADE",    "Month3",
                   "Month6",    "Month9",  "Month15", "IMonth3", "IMonth6",  "IMonth9",
                   "IMonth15",  "TMonth3", "TMonth6", "TMonth9", "TMonth15"};
  s.alpha_fixed = {"Intercept", "IDU", "MSM"};
  s.w_names = {"Intercept", "PB", "PBxI", "PBxT", "CASUAL", "TRADE"};
  return s;
}

Dataset trial_design(const TrialDesignOptions& opt, Rng& rng) {
  if (opt.n_subjects < 1) throw ValidationError("trial design needs at least one subject");
  if (!(opt.retention >= 0.0 && opt.retention <= 1.0)) {
    throw ValidationError("retention must lie in [0, 1]");
  }
  if (opt.months.empty() || opt.months.front() != 0.0) {
    throw ValidationError("trial design months must start with the baseline 0");
  }
  const std::vector<double> followups(opt.months.begin() + 1, opt.months.end());

  Dataset d;
  d.schema = trial_schema();
  d.covariate_columns = {"IDU", "MSM", "CASUAL", "TRADE"};
  for (const char* arm : {"", "I", "T"}) {
    for (double m : followups) {
      d.covariate_columns.push_back(std::string(arm) + "Month" + format_double(m));
    }
  }
  d.covariate_columns.insert(d.covariate_columns.end(), {"PB", "PBxI", "PBxT"});
  if (followups.size() != 4) {
    // Only the 0/3/6/9/15 layout matches the stock schema; keep the alpha list in step.
    d.schema.alpha_names = {"Intercept", "IDU", "MSM", "CASUAL", "TRADE"};
    for (std::size_t c = 4; c + 3 < d.covariate_columns.size(); ++c) {
      d.schema.alpha_names.push_back(d.covariate_columns[c]);
    }
  }

  std::bernoulli_distribution idu(opt.p_idu), msm(opt.p_msm), casual(opt.p_casual),
      trade(opt.p_trade), kept(opt.retention);
  std::uniform_int_distribution<int> arm_of(0, 2);
  const std::size_t nf = followups.size();
  for (int i = 0; i < opt.n_subjects; ++i) {
    const int arm = arm_of(rng);  // 0 = C, 1 = I, 2 = T
    const double x_idu = idu(rng) ? 1.0 : 0.0;
    const double x_msm = msm(rng) ? 1.0 : 0.0;
    d.subject_ids.push_back("S" + std::to_string(i + 1));
    d.subject_begin.push_back(static_cast<int>(d.rows.size()));
    for (std::size_t v = 0; v < opt.months.size(); ++v) {
      const bool present = v == 0 || kept(rng);
      const double x_casual = casual(rng) ? 1.0 : 0.0;
      const double x_trade = trade(rng) ? 1.0 : 0.0;
      if (!present) continue;
      std::vector<double> cov(d.covariate_columns.size(), 0.0);
      cov[0] = x_idu;
      cov[1] = x_msm;
      cov[2] = x_casual;
      cov[3] = x_trade;
      if (v > 0) {
        cov[4 + (v - 1)] = 1.0;
        if (arm > 0) cov[4 + static_cast<std::size_t>(arm) * nf + (v - 1)] = 1.0;
        const std::size_t pb = 4 + 3 * nf;
        cov[pb] = 1.0;
        if (arm == 1) cov[pb + 1] = 1.0;
        if (arm == 2) cov[pb + 2] = 1.0;
      }
      ObservationDesign obs;
      obs.time = opt.months[v];
      obs.subject_index = i;
      d.rows.push_back(std::move(obs));
      d.covariates.push_back(std::move(cov));
    }
  }
  d.subject_begin.push_back(static_cast<int>(d.rows.size()));
  d.rebuild_design();
  return d;
}

}  // namespace bdprem
