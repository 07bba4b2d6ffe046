#pragma once

// Structured text configuration:
//
//   # comment
//   [section]
//   key = value
//   name, 0.5, 1.2        <- free-form comma separated rows
//
// Used for fit configurations, prior tables and simulation scenarios.

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bdprem {

struct ConfigRow {
  std::vector<std::string> fields;
  int line = 0;
};

struct ConfigSection {
  std::string name;
  std::map<std::string, std::string> values;
  std::map<std::string, int> value_lines;
  std::vector<ConfigRow> rows;

  bool has(const std::string& key) const { return values.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::string require(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key) const;
};

class ConfigFile {
 public:
  static ConfigFile parse(std::istream& in, const std::string& source = "<config>");
  static ConfigFile load(const std::filesystem::path& path);

  bool has_section(const std::string& name) const;
  const ConfigSection& section(const std::string& name) const;  // throws if missing
  const ConfigSection* find(const std::string& name) const;
  const std::string& source() const { return source_; }
  // Directory of the file; relative paths inside the file resolve against it.
  const std::filesystem::path& base_dir() const { return base_dir_; }

 private:
  std::string source_;
  std::filesystem::path base_dir_;
  std::vector<ConfigSection> sections_;
};

std::string trim(std::string_view s);
std::vector<std::string> split_fields(std::string_view s, char sep = ',');
double parse_double(const std::string& text, const std::string& context);
long parse_long(const std::string& text, const std::string& context);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace bdprem
