#ifndef BTOWER_CONFIG_HPP
#define BTOWER_CONFIG_HPP

#include "btower/experiments.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace btower {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Values given on the command line or in a [defaults] section; unset fields
// leave the experiment's own default alone.
struct SettingsOverride {
  std::optional<int> N;
  std::optional<int> k;
  std::optional<double> box;
  std::optional<double> eps_min;
  std::optional<double> eps_max;
  std::optional<int> eps_samples;
  std::optional<int> grid_nodes;
  std::optional<int> panels_per_decade;
  std::optional<int> degree;
  std::optional<double> tol;
  std::optional<bool> extended;

  void apply(ExperimentSettings& s) const;
  // later wins
  SettingsOverride merged(const SettingsOverride& later) const;
};

struct RunConfig {
  std::vector<std::string> experiments;
  std::string out = "btower-out";
  SettingsOverride defaults;
  std::map<std::string, SettingsOverride> per_experiment;

  ExperimentSettings settings_for(const std::string& name, const SettingsOverride& cli = {}) const;
};

// Every experiment in campaign order with built-in settings.
RunConfig default_campaign();

// INI-style file: [campaign] experiments/out, [defaults], and one optional
// section per experiment name.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text);

// Throws ConfigError when the settings break a module precondition.
void validate(const ExperimentSettings& s);

}  // namespace btower

#endif
