#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace vab {

/// Flat `key = value` document. Keys are dotted paths (`voful.c_iota`);
/// `#` starts a comment. Typed getters raise ConfigError naming the key.
class Config {
 public:
  static Config parse(std::istream& in, const std::string& source = "<config>");
  static Config parse_string(const std::string& text);
  static Config load(const std::filesystem::path& path);

  /// Adds or replaces a key (command-line overrides).
  void set(const std::string& key, const std::string& value);
  /// Parses `key=value`.
  void set_assignment(const std::string& assignment);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& key) const;
  /// Comma list of integers or inclusive ranges `a..b`.
  std::vector<long long> get_int_list(const std::string& key) const;

  /// Throws ConfigError for the first key no getter has read.
  void reject_unused() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  const std::string& raw(const std::string& key) const;

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

}  // namespace vab
