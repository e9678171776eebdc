#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "advreg/trainer.hpp"

namespace advreg::config {

enum class Type { text, count, integer, real, boolean, counts, reals };

struct KeySpec {
  std::string key;
  Type type = Type::text;
  std::string fallback;  // default as text; empty means unset
  std::string help;
};

// Commands: train, sweep, verify-bounds, rate-check, flow, genbound, nta.
const std::vector<std::string>& commands();
// Keys accepted by a command; throws ConfigError for an unknown command.
const std::vector<KeySpec>& keys(const std::string& command);

struct Raw {
  std::map<std::string, std::string> values;
  std::vector<std::string> warnings;
  std::optional<std::string> command;  // set when read from a manifest
};

// Flat `key = value` lines; '#' starts a comment. A repeated key keeps the
// last value and adds a warning. Text starting with '{' is read as a run
// manifest and its "config" object supplies the values.
Raw parse_text(const std::string& text, const std::string& origin = "config");
Raw parse_file(const std::filesystem::path& path);

// A resolved, type-checked configuration for one command.
class Settings {
 public:
  const std::string& command() const { return command_; }
  bool has(const std::string& key) const;  // set to a non-empty value
  std::string text(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  double real(const std::string& key) const;
  bool boolean(const std::string& key) const;
  std::vector<std::size_t> counts(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
  const std::vector<std::string>& warnings() const { return warnings_; }

  // Typed values of every key, unset keys as null.
  nlohmann::json to_json() const;

 private:
  friend Settings resolve(const std::string&, const std::optional<std::filesystem::path>&,
                          const std::map<std::string, std::string>&);
  friend Settings resolve_raw(const std::string&, const Raw&, const std::map<std::string, std::string>&);
  const KeySpec& spec(const std::string& key) const;
  std::string command_;
  std::map<std::string, std::string> values_;
  std::vector<std::string> warnings_;
};

// Precedence: overrides > file > defaults. Unknown keys and values that do
// not parse as the key's type throw ConfigError naming the key.
Settings resolve(const std::string& command, const std::optional<std::filesystem::path>& file,
                 const std::map<std::string, std::string>& overrides);
Settings resolve_raw(const std::string& command, const Raw& file, const std::map<std::string, std::string>& overrides);

// Training keys to a validated TrainConfig. The mse_threshold default depends
// on the dataset: 0.001 for mnist and fashion-mnist, 0.02 for cifar10.
trainer::TrainConfig to_train_config(const Settings& s);

// Where bundled datasets live when data_dir is not set.
std::filesystem::path default_data_dir();

}  // namespace advreg::config
