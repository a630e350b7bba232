#pragma once

#include "sepsis/features.hpp"
#include "sepsis/resample.hpp"
#include "sepsis/trees.hpp"

#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace sepsis {

struct RunConfig {
  std::string vitals;
  std::string demographics;
  std::string onsets;
  std::string output_dir;
  std::string preset = "eicu-like";
  int k = 5;
  std::uint64_t seed = 0;
  int workers = 1;
  int trials = 25;
  std::string threshold_policy = "recall_at_least:0.8";
  std::string model = "gbdt";  // gbdt | logistic
  FeatureRecipe recipe;
  BoostParams boost;
  LogisticParams logistic;
  ValidityRule validity;
};

/// Every key accepted by config files and `--set`.
std::vector<std::string> config_keys();

/// Parses `value` for `key` into the config. Throws on unknown keys and type
/// mismatches.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

/// Flat `key = value` lines; `#` starts a comment. Errors carry the line number.
RunConfig parse_config(std::istream& in, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

/// Boost parameters as config lines, readable by parse_config.
std::string boost_params_config(const BoostParams& params);

}  // namespace sepsis
