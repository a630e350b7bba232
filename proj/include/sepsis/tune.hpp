#pragma once

#include "sepsis/cv.hpp"
#include "sepsis/random.hpp"
#include "sepsis/trees.hpp"

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace sepsis {

using ParamValue = std::variant<double, std::string>;

struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};
struct LogUniform {
  double lo = 1e-3;
  double hi = 1.0;
};
struct IntUniform {
  long long lo = 0;
  long long hi = 1;
};
struct Choice {
  std::vector<ParamValue> options;
};
using Distribution = std::variant<Uniform, LogUniform, IntUniform, Choice>;

/// "uniform(lo,hi)", "log_uniform(lo,hi)", "int_uniform(lo,hi)" or "choice(a,b,...)".
Distribution parse_distribution(std::string_view s);
std::string format_distribution(const Distribution& d);

struct SearchSpace {
  std::map<std::string, Distribution> params;  // drawn in key order

  void validate() const;
};

/// The default space; the pos_weight choice includes the inverse class ratio.
SearchSpace default_search_space(double prevalence);

/// Assigns one named BoostParams field. Integer fields round to nearest.
void set_param(BoostParams& params, const std::string& name, const ParamValue& value);

/// Draws every parameter of `space` in name order; others keep `base`.
BoostParams sample_params(const SearchSpace& space, Rng& rng, const BoostParams& base = {},
                          std::map<std::string, ParamValue>* drawn = nullptr);

std::string params_to_json(const BoostParams& params);

struct TrialResult {
  int trial = 0;
  BoostParams params;
  double mean_auc = kMissing;
  double mean_recall = kMissing;
  double mean_train_time_s = kMissing;
  std::string status;  // "ok" or "failed: <reason>"

  bool ok() const { return status == "ok"; }
};

struct SearchResult {
  FoldAssignment folds;  // shared by every trial
  std::vector<TrialResult> trials;
  int best_trial = -1;
  BoostParams best;
};

/// Seeded random search scored by mean out-of-fold AUC; ties keep the earlier trial.
SearchResult random_search(const FeatureMatrix& matrix, const SearchSpace& space, int trials, int k,
                           std::uint64_t seed, const BoostParams& base = {}, int workers = 1,
                           const ThresholdPolicy& policy = RecallAtLeast{});

/// `trial,params_json,mean_auc,mean_recall,mean_train_time_s,status`
void write_trials_csv(std::ostream& out, const SearchResult& result);

}  // namespace sepsis
