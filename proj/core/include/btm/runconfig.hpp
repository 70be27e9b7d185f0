#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace btm {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat key-value run configuration ("section.key = value" lines). Precedence,
// lowest to highest: built-in defaults, config file, --profile preset,
// BTM_* environment variables, --set overrides.
class RunConfig {
 public:
  static RunConfig from_file(const std::filesystem::path& path);
  static RunConfig from_string(const std::string& text);

  void apply_profile(const std::string& name);  // "desk" or "full"
  void apply_env();
  void apply_override(const std::string& key_equals_value);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<int> get_int_list(const std::string& key, std::vector<int> fallback) const;

  void set(const std::string& key, const std::string& value);

  // FNV-1a over the sorted effective key/value pairs; stable across reruns.
  std::string hash() const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace btm
