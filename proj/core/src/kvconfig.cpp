#include "coart/kvconfig.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "coart/common.hpp"
#include "coart/csv.hpp"

namespace coart {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KvConfig KvConfig::parse(std::istream& is) {
  KvConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    require(eq != std::string::npos, "config line {}: expected 'key = value', got '{}'", lineno,
            trimmed);
    const std::string key = trim(trimmed.substr(0, eq));
    const std::string value = trim(trimmed.substr(eq + 1));
    require(!key.empty(), "config line {}: empty key", lineno);
    require(!cfg.has(key), "config line {}: duplicate key '{}'", lineno, key);
    cfg.items_[key] = value;
  }
  return cfg;
}

KvConfig KvConfig::parse_file(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), "cannot open config '{}'", path);
  return parse(is);
}

const std::string& KvConfig::get(const std::string& key) const {
  auto it = items_.find(key);
  if (it == items_.end()) fail("config key '{}' missing", key);
  return it->second;
}

std::string KvConfig::get(const std::string& key, const std::string& fallback) const {
  auto it = items_.find(key);
  return it == items_.end() ? fallback : it->second;
}

int KvConfig::get_int(const std::string& key) const { return parse_int(get(key), key); }

int KvConfig::get_int(const std::string& key, int fallback) const {
  return has(key) ? get_int(key) : fallback;
}

double KvConfig::get_double(const std::string& key) const { return parse_double(get(key), key); }

double KvConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

void KvConfig::set_int(const std::string& key, long long value) {
  items_[key] = fmt::format("{}", value);
}

void KvConfig::set_double(const std::string& key, double value) {
  items_[key] = format_number(value);
}

void KvConfig::write(std::ostream& os) const {
  for (const auto& [key, value] : items_) os << key << " = " << value << '\n';
}

void KvConfig::write_file(const std::string& path) const {
  std::ofstream os(path);
  require(os.good(), "cannot open '{}' for writing", path);
  write(os);
  require(os.good(), "write failed for '{}'", path);
}

}  // namespace coart
