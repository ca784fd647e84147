#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace fddm::pipeline {

enum class KeyType { integer, real, boolean, text };

struct KeySpec {
  std::string_view key;
  KeyType type;
  /// Empty for keys a command must be given explicitly.
  std::optional<std::string_view> default_value;
  std::string_view doc;
};

/// Every recognised configuration key.
std::span<const KeySpec> known_keys();

/// Flat key=value configuration. Blank lines and lines starting with '#'
/// are ignored; keys use dotted sections (sampler.horizon). Unknown keys,
/// duplicate keys and values of the wrong type are ConfigErrors.
class Config {
 public:
  static Config parse(std::string_view text, const std::string& origin = "<config>");
  static Config load(const std::filesystem::path& path);

  /// Sets or replaces a value after validating key and type.
  void set(const std::string& key, const std::string& value);
  bool is_set(const std::string& key) const { return values_.count(key) != 0; }

  /// Explicit value, else the default. Throws ConfigError naming the key
  /// when neither exists.
  std::int64_t get_int(const std::string& key) const;
  double get_real(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::string get_text(const std::string& key) const;

  /// All effective values (explicit and defaulted), sorted by key.
  std::map<std::string, std::string> resolved() const;

 private:
  std::string raw(const std::string& key, KeyType type) const;
  std::map<std::string, std::string> values_;
};

}  // namespace fddm::pipeline
