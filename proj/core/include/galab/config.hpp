#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "galab/agents.hpp"

namespace galab {

/// A parsed config value: string, number, boolean, array, or table.
struct ConfigValue {
  using Array = std::vector<ConfigValue>;
  using Table = std::map<std::string, ConfigValue>;

  std::variant<std::string, double, bool, std::shared_ptr<Array>, std::shared_ptr<Table>> data;
  int line = 0;

  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_number() const { return std::holds_alternative<double>(data); }
  bool is_bool() const { return std::holds_alternative<bool>(data); }
  bool is_array() const { return std::holds_alternative<std::shared_ptr<Array>>(data); }
  bool is_table() const { return std::holds_alternative<std::shared_ptr<Table>>(data); }
  const Array& array() const { return *std::get<std::shared_ptr<Array>>(data); }
  const Table& table() const { return *std::get<std::shared_ptr<Table>>(data); }
};

/// Parses the subset of TOML used by experiment files: `key = value` lines,
/// `[section]` headers, `#` comments, double-quoted strings, numbers,
/// booleans, single-line arrays and inline tables. Errors carry the source
/// name and line.
ConfigValue::Table parse_config_text(std::string_view text, const std::string& source = "<config>");

/// [bias] block.
struct BiasConfig {
  bool enabled = true;
  long cadence = 10'000;
  int n_states = 64;
  int n_rollouts = 10;
};

struct ExperimentConfig {
  std::string env = "pendulum";
  AgentConfig agent;
  long total_steps = 100'000;
  long eval_interval = 5'000;
  int eval_episodes = 10;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::string out = "runs/experiment";
  BiasConfig bias;
  bool save_checkpoint = false;
  /// Original file text, echoed into the artifact directory.
  std::string source_text;

  void validate() const;
};

/// Unknown keys, wrong types, and invalid values raise ConfigError naming
/// the source, line, and key.
ExperimentConfig parse_experiment_config(std::string_view text, const std::string& source = "<config>");
ExperimentConfig load_experiment_config(const std::string& path);

/// Builds an activation from an inline table or [activation] section.
ActivationSpec activation_from_table(const ConfigValue::Table& table, const std::string& source);

}  // namespace galab
