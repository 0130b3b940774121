#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace mswave {

/// Flat `section.key = value` configuration. `#` starts a comment. Numbers
/// may be written as fractions ("1/8"); lists are comma or space separated.
class Config {
 public:
  static Config parse(std::istream& in, const std::string& origin = "<config>");
  static Config parse_string(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  double require_double(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_list(const std::string& key) const;

  /// Throws ConfigError naming the first key outside `known`.
  void check_known(const std::set<std::string>& known) const;

  /// Sorted "key=value" lines of the keys starting with one of the prefixes.
  std::string canonical(const std::vector<std::string>& prefixes) const;

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

/// Parses "3", "-2.5e-3" or "1/8". Throws ConfigError mentioning `what`.
double parse_number(const std::string& text, const std::string& what);

}  // namespace mswave
