#include "mswave/config.hpp"

#include "mswave/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mswave {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_plain(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  if (t.empty()) throw ConfigError(what + ": empty number");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ConfigError(what + ": '" + t + "' is not a number");
  }
  if (used != t.size() || !std::isfinite(v)) throw ConfigError(what + ": '" + t + "' is not a number");
  return v;
}

}  // namespace

double parse_number(const std::string& text, const std::string& what) {
  const auto slash = text.find('/');
  if (slash == std::string::npos) return parse_plain(text, what);
  const double num = parse_plain(text.substr(0, slash), what);
  const double den = parse_plain(text.substr(slash + 1), what);
  if (den == 0.0) throw ConfigError(what + ": division by zero in '" + trim(text) + "'");
  return num / den;
}

Config Config::parse(std::istream& in, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": missing key");
    for (char c : key) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_')) {
        throw ConfigError(where + ": invalid key '" + key + "'");
      }
    }
    if (cfg.values_.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    cfg.values_[key] = value;
  }
  return cfg;
}

Config Config::parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse(in, path);
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::string Config::require_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) throw ConfigError("missing required key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? parse_number(values_.at(key), key) : fallback;
}

double Config::require_double(const std::string& key) const { return parse_number(require_string(key), key); }

int Config::get_int(const std::string& key, int fallback) const {
  if (!has(key)) return fallback;
  const double v = parse_number(values_.at(key), key);
  if (v != std::round(v) || std::abs(v) > 1e9) throw ConfigError(key + ": expected an integer");
  return static_cast<int>(v);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  std::string v = values_.at(key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + values_.at(key) + "'");
}

std::vector<double> Config::get_list(const std::string& key) const {
  std::vector<double> out;
  if (!has(key)) return out;
  std::string text = values_.at(key);
  std::replace(text.begin(), text.end(), ',', ' ');
  std::istringstream in(text);
  std::string item;
  while (in >> item) out.push_back(parse_number(item, key));
  return out;
}

void Config::check_known(const std::set<std::string>& known) const {
  for (const auto& [key, value] : values_) {
    if (!known.count(key)) throw ConfigError(origin_ + ": unknown key '" + key + "'");
  }
}

std::string Config::canonical(const std::vector<std::string>& prefixes) const {
  std::string out;
  for (const auto& [key, value] : values_) {
    for (const auto& p : prefixes) {
      if (key.compare(0, p.size(), p) == 0) {
        out += key + "=" + value + "\n";
        break;
      }
    }
  }
  return out;
}

}  // namespace mswave
