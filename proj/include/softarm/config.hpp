#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace softarm {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `name = value` configuration. Lines starting with '#' and blank lines
/// are ignored; anything else without '=' is an error carrying its line number.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(const std::string& text,
                              const std::string& origin = "<string>");
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;

  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const;

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);

  /// Serialized in key order, one `name = value` per line.
  std::string to_string() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

  /// Throws ConfigError naming the key and, when known, its file and line.
  [[noreturn]] void reject(const std::string& key, const std::string& what) const;

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
  std::string origin_;
};

/// Locale-independent shortest round-trip formatting.
std::string format_number(double value);
/// Locale-independent fixed-precision formatting.
std::string format_fixed(double value, int digits);

}  // namespace softarm
