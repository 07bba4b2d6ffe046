#include "bdprem/csv.hpp"

#include <fstream>

#include "bdprem/config.hpp"
#include "bdprem/error.hpp"

namespace bdprem {

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ValidationError(source + ": missing column '" + name + "'");
}

double CsvTable::number(std::size_t row, std::size_t col) const {
  return parse_double(rows[row][col], source + ":" + std::to_string(lines[row]) + " column '" +
                                          header[col] + "'");
}

CsvTable parse_csv(std::istream& in, const std::string& source) {
  CsvTable t;
  t.source = source;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw ValidationError(source + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(t.header.size()) + " fields, found " +
                            std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.lines.push_back(lineno);
  }
  if (!have_header) throw ValidationError(source + ": empty file");
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return parse_csv(in, path.string());
}

}  // namespace bdprem
