#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace tdvs {

/// Config file or config value problem; maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class KeyType { Int, U64, Double, Bool, String };

struct KeySpec {
  std::string name;
  KeyType type;
  std::string default_value;
  std::string doc;
};

/// Flat `key = value` configuration shared by all commands. Lines starting
/// with '#' are comments. Every key must be in the schema; every value must
/// parse as the key's type. Unset keys take their schema defaults.
class RunConfig {
 public:
  static const std::vector<KeySpec>& schema();

  static RunConfig parse_file(const std::filesystem::path& path);
  static RunConfig parse_string(const std::string& text);

  bool is_set(const std::string& key) const { return values_.count(key) > 0; }

  int get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  const std::string& get_string(const std::string& key) const;

  void set(const std::string& key, const std::string& value);

  /// All schema keys with their resolved values, in schema order.
  std::vector<std::pair<std::string, std::string>> effective() const;

  /// Writes the resolved configuration as a reloadable config file.
  void write_effective(const std::filesystem::path& path) const;

 private:
  const std::string& raw(const std::string& key) const;
  std::map<std::string, std::string> values_;
};

}  // namespace tdvs
