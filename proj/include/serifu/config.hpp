#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "serifu/error.hpp"
#include "serifu/subword.hpp"

namespace serifu {

// Flat `key = value` text. '#' starts a comment line; a `version` key is
// mandatory and must be 1.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in) {
    KeyValueConfig cfg;
    std::string raw;
    for (std::size_t lineno = 1; std::getline(in, raw); ++lineno) {
      std::string_view line = trim(raw);
      if (line.empty() || line.front() == '#') continue;
      auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ParseError("expected key = value", lineno);
      std::string key(trim(line.substr(0, eq)));
      std::string value(trim(line.substr(eq + 1)));
      if (key.empty()) throw ParseError("empty key", lineno);
      if (!cfg.values_.emplace(key, value).second) throw ParseError("duplicate key '" + key + "'", lineno);
    }
    auto version = cfg.values_.find("version");
    if (version == cfg.values_.end()) throw ValidationError("config is missing the version key");
    if (version->second != "1") throw ValidationError("unsupported config version " + version->second);
    return cfg;
  }

  static KeyValueConfig parse(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse(in);
  }

  static KeyValueConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config: " + path.string());
    return parse(in);
  }

  bool has(const std::string& key) const { return values_.contains(key); }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ValidationError("missing config key '" + key + "'");
    return it->second;
  }

  template <typename T>
  T get_as(const std::string& key) const {
    const std::string& v = get(key);
    if constexpr (std::is_same_v<T, double>) {
      auto d = detail::parse_double(v);
      if (!d) throw ValidationError("config key '" + key + "' is not a number: " + v);
      return *d;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (v == "true" || v == "1") return true;
      if (v == "false" || v == "0") return false;
      throw ValidationError("config key '" + key + "' is not a boolean: " + v);
    } else {
      auto i = detail::parse_int<T>(v);
      if (!i) throw ValidationError("config key '" + key + "' is not an integer: " + v);
      return *i;
    }
  }

  template <typename T>
  void read(const std::string& key, T& target) const {
    if (has(key)) target = get_as<T>(key);
  }

  std::vector<std::string> get_list(const std::string& key) const {
    std::vector<std::string> out;
    std::string_view v = get(key);
    while (!v.empty()) {
      auto comma = v.find(',');
      auto item = trim(v.substr(0, comma));
      if (!item.empty()) out.emplace_back(item);
      if (comma == std::string_view::npos) break;
      v.remove_prefix(comma + 1);
    }
    return out;
  }

  // Rejects keys outside `known`; prefixes ending in '.' match whole families.
  void check_keys(const std::set<std::string>& known) const {
    for (const auto& [key, value] : values_) {
      if (known.contains(key)) continue;
      bool family = false;
      for (const auto& k : known) {
        if (!k.empty() && k.back() == '.' && key.rfind(k, 0) == 0) family = true;
      }
      if (!family) throw ValidationError("unknown config key '" + key + "'");
    }
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  static std::string_view trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
};

}  // namespace serifu
