#pragma once

#include <iosfwd>
#include <map>
#include <string>

namespace coart {

/// Flat "key = value" config file: one pair per line, '#' comments,
/// blank lines ignored. Keys are unique; writing emits sorted keys so
/// the resolved-config echo is byte-stable.
class KvConfig {
 public:
  KvConfig() = default;

  static KvConfig parse(std::istream& is);
  static KvConfig parse_file(const std::string& path);

  bool has(const std::string& key) const { return items_.count(key) != 0; }

  const std::string& get(const std::string& key) const;  // throws if absent
  std::string get(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;

  void set(const std::string& key, const std::string& value) { items_[key] = value; }
  void set_int(const std::string& key, long long value);
  void set_double(const std::string& key, double value);

  void write(std::ostream& os) const;
  void write_file(const std::string& path) const;

  const std::map<std::string, std::string>& items() const { return items_; }

 private:
  std::map<std::string, std::string> items_;
};

}  // namespace coart
