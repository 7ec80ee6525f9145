#include "ecgbal/keyvalue.hpp"

#include <fstream>
#include <sstream>

#include "csv_util.hpp"
#include "ecgbal/error.hpp"

namespace ecgbal {

KeyValueConfig::KeyValueConfig(std::map<std::string, std::string> entries)
    : entries_(std::move(entries)) {}

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  std::map<std::string, std::string> entries;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(detail::trim(body.substr(0, eq)));
    const std::string value(detail::trim(body.substr(eq + 1)));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (!entries.emplace(key, value).second) {
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }
  return KeyValueConfig(std::move(entries));
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config '" + file.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str());
}

bool KeyValueConfig::contains(const std::string& key) const { return entries_.count(key) != 0; }

void KeyValueConfig::set(const std::string& key, const std::string& value) { entries_[key] = value; }

std::optional<std::string> KeyValueConfig::string(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  used_.insert(key);
  return it->second;
}

std::string KeyValueConfig::string_or(const std::string& key, const std::string& fallback) const {
  return string(key).value_or(fallback);
}

double KeyValueConfig::real_or(const std::string& key, double fallback) const {
  const auto s = string(key);
  if (!s) return fallback;
  const auto v = detail::parse_double(*s);
  if (!v) throw ConfigError("'" + key + "' must be a number, got '" + *s + "'");
  return *v;
}

std::size_t KeyValueConfig::count_or(const std::string& key, std::size_t fallback) const {
  const auto s = string(key);
  if (!s) return fallback;
  const auto v = detail::parse_index(*s);
  if (!v) throw ConfigError("'" + key + "' must be a nonnegative integer, got '" + *s + "'");
  return *v;
}

std::uint64_t KeyValueConfig::seed_or(const std::string& key, std::uint64_t fallback) const {
  return count_or(key, fallback);
}

bool KeyValueConfig::flag_or(const std::string& key, bool fallback) const {
  const auto s = string(key);
  if (!s) return fallback;
  if (*s == "true" || *s == "1" || *s == "yes") return true;
  if (*s == "false" || *s == "0" || *s == "no") return false;
  throw ConfigError("'" + key + "' must be true or false, got '" + *s + "'");
}

std::vector<std::string> KeyValueConfig::list(const std::string& key) const {
  const auto s = string(key);
  std::vector<std::string> out;
  if (!s || detail::trim(*s).empty()) return out;
  for (const auto field : detail::split_fields(*s)) out.emplace_back(detail::trim(field));
  return out;
}

std::vector<double> KeyValueConfig::real_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : list(key)) {
    const auto v = detail::parse_double(item);
    if (!v) throw ConfigError("'" + key + "' has a non-numeric entry '" + item + "'");
    out.push_back(*v);
  }
  return out;
}

std::vector<std::size_t> KeyValueConfig::count_list(const std::string& key) const {
  std::vector<std::size_t> out;
  for (const auto& item : list(key)) {
    const auto v = detail::parse_index(item);
    if (!v) throw ConfigError("'" + key + "' has a non-integer entry '" + item + "'");
    out.push_back(*v);
  }
  return out;
}

void KeyValueConfig::reject_unused() const {
  std::string unknown;
  for (const auto& [key, value] : entries_) {
    if (!used_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
  }
  if (!unknown.empty()) throw ConfigError("unknown configuration keys: " + unknown);
}

}  // namespace ecgbal
