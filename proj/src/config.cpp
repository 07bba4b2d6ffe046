#include "bdprem/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>

#include "bdprem/error.hpp"

namespace bdprem {

std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split_fields(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ValidationError(context + ": expected a number, got '" + text + "'");
  }
  return v;
}

long parse_long(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  long v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ValidationError(context + ": expected an integer, got '" + text + "'");
  }
  return v;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::optional<std::string> ConfigSection::get(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) return std::nullopt;
  return it->second;
}

std::string ConfigSection::require(const std::string& key) const {
  auto v = get(key);
  if (!v) throw ValidationError("[" + name + "] is missing required key '" + key + "'");
  return *v;
}

double ConfigSection::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  return v ? parse_double(*v, "[" + name + "] " + key) : fallback;
}

long ConfigSection::get_long(const std::string& key, long fallback) const {
  auto v = get(key);
  return v ? parse_long(*v, "[" + name + "] " + key) : fallback;
}

bool ConfigSection::get_bool(const std::string& key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::string t = *v;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
  if (t == "false" || t == "no" || t == "0" || t == "off") return false;
  throw ValidationError("[" + name + "] " + key + ": expected true/false, got '" + *v + "'");
}

std::vector<std::string> ConfigSection::get_list(const std::string& key) const {
  auto v = get(key);
  if (!v || trim(*v).empty()) return {};
  return split_fields(*v);
}

ConfigFile ConfigFile::parse(std::istream& in, const std::string& source) {
  ConfigFile cfg;
  cfg.source_ = source;
  ConfigSection* current = nullptr;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    if (t.front() == '[') {
      if (t.back() != ']') throw ValidationError(where + ": malformed section header");
      const std::string name = trim(std::string_view(t).substr(1, t.size() - 2));
      if (cfg.find(name)) throw ValidationError(where + ": duplicate section [" + name + "]");
      cfg.sections_.push_back(ConfigSection{name, {}, {}, {}});
      current = &cfg.sections_.back();
      continue;
    }
    if (!current) throw ValidationError(where + ": content before the first [section]");
    // A comma before the first '=' marks a row such as "IDU, 0.78, d=20".
    auto eq = t.find('=');
    if (eq != std::string::npos && t.find(',') > eq) {
      const std::string key = trim(std::string_view(t).substr(0, eq));
      if (key.empty()) throw ValidationError(where + ": empty key");
      if (current->values.count(key)) throw ValidationError(where + ": duplicate key '" + key + "'");
      current->values[key] = trim(std::string_view(t).substr(eq + 1));
      current->value_lines[key] = lineno;
    } else {
      current->rows.push_back({split_fields(t), lineno});
    }
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  ConfigFile cfg = parse(in, path.string());
  cfg.base_dir_ = path.parent_path();
  return cfg;
}

bool ConfigFile::has_section(const std::string& name) const { return find(name) != nullptr; }

const ConfigSection* ConfigFile::find(const std::string& name) const {
  for (const auto& s : sections_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

const ConfigSection& ConfigFile::section(const std::string& name) const {
  const auto* s = find(name);
  if (!s) throw ValidationError(source_ + ": missing section [" + name + "]");
  return *s;
}

}  // namespace bdprem
