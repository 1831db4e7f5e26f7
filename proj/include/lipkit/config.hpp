#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lipkit {

/// Flat TOML-compatible configuration: `key = value` lines, `#` comments,
/// optional `[section]` headers (keys become "section.key"), values are
/// numbers, booleans, quoted strings or flat arrays of numbers.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text, const std::string& origin = "<config>");
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, std::string raw) { values_[key] = std::move(raw); }

  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;

  /// Throws on keys outside `known`, so typos do not silently fall back.
  void require_known(const std::vector<std::string>& known) const;

  const std::map<std::string, std::string>& raw() const { return values_; }

 private:
  std::optional<std::string> lookup(const std::string& key) const;

  std::string origin_ = "config";
  std::map<std::string, std::string> values_;
};

}  // namespace lipkit
