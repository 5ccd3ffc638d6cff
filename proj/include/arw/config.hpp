#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace arw::cli {

/// Bad command line or config file. The message names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KeySpec {
  std::string name;
  std::optional<std::string> fallback;  // nullopt: required
  bool flag = false;                    // may appear without a value ("true")
  std::string help;
};

struct Schema {
  std::string subcommand;
  std::string summary;
  std::vector<KeySpec> keys;

  const KeySpec* find(std::string_view key) const;
};

/// Schema of a subcommand; throws ConfigError for an unknown one.
const Schema& schema_for(std::string_view subcommand);
std::span<const Schema> all_schemas();

/// Resolved key/value configuration in schema order.
class Config {
 public:
  Config(const Schema& schema, std::vector<std::pair<std::string, std::string>> values);

  const std::string& subcommand() const noexcept { return schema_->subcommand; }
  bool has(std::string_view key) const;
  const std::string& text(std::string_view key) const;

  double real(std::string_view key) const;
  std::int64_t integer(std::string_view key) const;
  std::uint64_t unsigned_integer(std::string_view key) const;
  bool boolean(std::string_view key) const;
  std::vector<double> real_list(std::string_view key) const;
  std::vector<std::int64_t> integer_list(std::string_view key) const;

  /// Runs `parse` on the value, rethrowing failures as ConfigError naming the key.
  template <class F>
  auto parsed(std::string_view key, F&& parse) const -> decltype(parse(std::string_view{})) {
    try {
      return parse(std::string_view(text(key)));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("key '" + std::string(key) + "': " + e.what());
    }
  }

  /// `subcommand=... key=value ...` with every resolved key, in schema order.
  std::string echo() const;

 private:
  const Schema* schema_;
  std::vector<std::pair<std::string, std::string>> values_;
};

/// Parses `<subcommand> [--key value | --flag]... [--config file]`. Values
/// from the file are overridden by flags; unset keys take their defaults.
Config parse_config(std::span<const std::string> args);

/// Parses a flat `key = value` file body; `#` starts a comment.
std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view body,
                                                                   std::string_view origin);

}  // namespace arw::cli
