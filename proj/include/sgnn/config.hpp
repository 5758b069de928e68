#pragma once

#include "sgnn/experiments.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace sgnn {

inline constexpr std::string_view tool_version = "0.3.0";
inline constexpr int config_schema_version = 1;

/// Flat `key = value` settings. Dotted keys name nested fields.
struct ConfigFile
{
  std::map<std::string, std::string> values;

  /// `#` starts a comment; blank lines are skipped. Duplicate keys: last wins.
  static ConfigFile parse(std::istream& in, std::string_view source = "<config>");
  static ConfigFile load(const std::string& path);
};

/// Everything a command can be configured with. `seed` feeds every module.
struct Settings
{
  std::uint64_t seed = 1;
  GenConfig gen;
  TrainConfig train;
  SweepSpec sweep;
  /// `analyze`: q in the epsilon_K term of the lucky-fraction bound.
  double lucky_q = 10.0;
  int alpha_reps = 20;

  /// Throws Error naming the key if it is unknown or its value does not parse.
  void set(std::string_view key, std::string_view value);
  void apply(const ConfigFile& file);

  /// Pushes `seed` into the nested configs.
  void finalize();

  /// All keys with their current values, sorted by key.
  std::map<std::string, std::string> resolved() const;
  static std::vector<std::string> keys();
};

struct RunManifest
{
  std::string command;
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> outputs;

  /// 64-bit hash of the sorted `key=value` lines; independent of input order.
  std::uint64_t config_hash() const;
  std::string to_json() const;
  void write(const std::string& path) const;
};

std::vector<double> parse_list(std::string_view text);
std::string format_list(const std::vector<double>& values);

}  // namespace sgnn
