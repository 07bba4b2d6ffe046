#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace bdprem {

// Plain comma separated table; no quoting support (none of our files need it).
struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> lines;  // 1-based source line of each row

  /// Column position by name; throws ValidationError naming the file if absent.
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, std::size_t col) const;
};

CsvTable parse_csv(std::istream& in, const std::string& source);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace bdprem
