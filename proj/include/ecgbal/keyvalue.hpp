#pragma once

// Flat `key = value` configuration files. Lines starting with '#' are
// comments; list values are comma separated. Every key must be consumed by
// the reader, so typos surface as errors instead of silently using defaults.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ecgbal {

class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  explicit KeyValueConfig(std::map<std::string, std::string> entries);

  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& file);

  bool contains(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  std::optional<std::string> string(const std::string& key) const;
  std::string string_or(const std::string& key, const std::string& fallback) const;
  double real_or(const std::string& key, double fallback) const;
  std::size_t count_or(const std::string& key, std::size_t fallback) const;
  std::uint64_t seed_or(const std::string& key, std::uint64_t fallback) const;
  bool flag_or(const std::string& key, bool fallback) const;
  std::vector<std::string> list(const std::string& key) const;
  std::vector<double> real_list(const std::string& key) const;
  std::vector<std::size_t> count_list(const std::string& key) const;

  // Throws ConfigError naming every key no accessor has read.
  void reject_unused() const;

 private:
  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> used_;
};

}  // namespace ecgbal
