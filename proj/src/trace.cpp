#include "bdprem/trace.hpp"

#include <fstream>

#include "bdprem/csv.hpp"
#include "bdprem/error.hpp"

namespace bdprem {
namespace fs = std::filesystem;
namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_matrix(const fs::path& path, const std::vector<std::string>& names,
                  const Eigen::MatrixXd& m) {
  auto out = open_out(path);
  out << "sample";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out << r + 1;
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << ',' << format_double(m(r, c));
    out << '\n';
  }
}

void write_column(const fs::path& path, const std::string& name, const std::vector<double>& v) {
  auto out = open_out(path);
  out << "sample," << name << '\n';
  for (std::size_t r = 0; r < v.size(); ++r) out << r + 1 << ',' << format_double(v[r]) << '\n';
}

Eigen::MatrixXd read_matrix(const fs::path& path, std::vector<std::string>& names) {
  const CsvTable t = read_csv(path);
  if (t.header.empty() || t.header[0] != "sample") {
    throw ValidationError(path.string() + ": first column must be 'sample'");
  }
  names.assign(t.header.begin() + 1, t.header.end());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 1; c < t.header.size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - 1)) = t.number(r, c);
    }
  }
  return m;
}

std::vector<double> read_column(const fs::path& path) {
  std::vector<std::string> names;
  const Eigen::MatrixXd m = read_matrix(path, names);
  if (m.cols() != 1) throw ValidationError(path.string() + ": expected one value column");
  return {m.data(), m.data() + m.rows()};
}

}  // namespace

void write_trace(const fs::path& dir, const Trace& trace) {
  fs::create_directories(dir);
  write_matrix(dir / "alpha.csv", trace.alpha_names, trace.alpha);
  if (!trace.psi_names.empty()) write_matrix(dir / "psi.csv", trace.psi_names, trace.psi);
  write_column(dir / "dbeta.csv", "dbeta", trace.dbeta);
  if (!trace.depsilon.empty()) write_column(dir / "depsilon.csv", "depsilon", trace.depsilon);

  if (!trace.z_selected.empty()) {
    auto out = open_out(dir / "z_selected.csv");
    out << "sample";
    for (int idx : trace.z_selected) out << ",z_" << idx + 1;
    out << '\n';
    for (std::size_t r = 0; r < trace.z_draws.size(); ++r) {
      out << r + 1;
      for (long z : trace.z_draws[r]) out << ',' << z;
      out << '\n';
    }
  }

  {
    auto out = open_out(dir / "adapt.csv");
    out << "block,iterations,acceptance,kappa\n";
    for (const auto& a : trace.adapt) {
      out << a.block << ',' << a.iterations << ',' << format_double(a.acceptance) << ','
          << format_double(a.kappa) << '\n';
    }
  }

  auto out = open_out(dir / "obs_means.csv");
  out << "obs,subject_id,time,y,z_mean,lambda_mean,mu_mean\n";
  for (std::size_t o = 0; o < trace.z_mean.size(); ++o) {
    out << o + 1 << ',' << trace.obs_subject[o] << ',' << format_double(trace.obs_time[o]) << ','
        << trace.obs_y[o] << ',' << format_double(trace.z_mean[o]) << ','
        << format_double(trace.lambda_mean[o]) << ',' << format_double(trace.mu_mean[o]) << '\n';
  }
}

Trace read_trace(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ValidationError("trace directory " + dir.string() + " not found");
  Trace t;
  t.alpha = read_matrix(dir / "alpha.csv", t.alpha_names);
  if (fs::exists(dir / "psi.csv")) {
    t.psi = read_matrix(dir / "psi.csv", t.psi_names);
  } else {
    t.psi.resize(t.alpha.rows(), 0);
  }
  t.dbeta = read_column(dir / "dbeta.csv");
  if (fs::exists(dir / "depsilon.csv")) t.depsilon = read_column(dir / "depsilon.csv");
  if (t.psi.rows() != t.alpha.rows() || static_cast<Eigen::Index>(t.dbeta.size()) != t.alpha.rows()) {
    throw ValidationError(dir.string() + ": trace files disagree on the number of samples");
  }

  if (fs::exists(dir / "z_selected.csv")) {
    const CsvTable zt = read_csv(dir / "z_selected.csv");
    for (std::size_t c = 1; c < zt.header.size(); ++c) {
      t.z_selected.push_back(static_cast<int>(parse_long(zt.header[c].substr(2), zt.source)) - 1);
    }
    for (std::size_t r = 0; r < zt.rows.size(); ++r) {
      std::vector<long> row;
      for (std::size_t c = 1; c < zt.header.size(); ++c) row.push_back(parse_long(zt.rows[r][c], zt.source));
      t.z_draws.push_back(std::move(row));
    }
  }

  if (fs::exists(dir / "adapt.csv")) {
    const CsvTable at = read_csv(dir / "adapt.csv");
    for (std::size_t r = 0; r < at.rows.size(); ++r) {
      AdaptDiagnostic a;
      a.block = at.rows[r][at.column("block")];
      a.iterations = parse_long(at.rows[r][at.column("iterations")], at.source);
      a.acceptance = at.number(r, at.column("acceptance"));
      a.kappa = at.number(r, at.column("kappa"));
      t.adapt.push_back(a);
    }
  }

  const CsvTable ot = read_csv(dir / "obs_means.csv");
  const auto cs = ot.column("subject_id"), ct = ot.column("time"), cy = ot.column("y"),
             cz = ot.column("z_mean"), cl = ot.column("lambda_mean"), cm = ot.column("mu_mean");
  for (std::size_t r = 0; r < ot.rows.size(); ++r) {
    t.obs_subject.push_back(ot.rows[r][cs]);
    t.obs_time.push_back(ot.number(r, ct));
    t.obs_y.push_back(parse_long(ot.rows[r][cy], ot.source));
    t.z_mean.push_back(ot.number(r, cz));
    t.lambda_mean.push_back(ot.number(r, cl));
    t.mu_mean.push_back(ot.number(r, cm));
  }
  return t;
}

}  // namespace bdprem
