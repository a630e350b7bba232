#include "sepsis/tune.hpp"

#include "sepsis/text.hpp"

#include <json.hpp>

#include <cmath>

namespace sepsis {

namespace {

std::string value_text(const ParamValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return text::format_double(*d);
  return std::get<std::string>(v);
}

double as_number(const std::string& name, const ParamValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  throw Error("parameter " + name + " expects a number, got '" + std::get<std::string>(v) + "'");
}

int as_int(const std::string& name, const ParamValue& v) {
  const double d = as_number(name, v);
  if (!std::isfinite(d)) throw Error("parameter " + name + " must be finite");
  return static_cast<int>(std::llround(d));
}

}  // namespace

Distribution parse_distribution(std::string_view s) {
  s = text::trim(s);
  const auto open = s.find('(');
  if (open == std::string_view::npos || s.back() != ')') {
    throw Error("bad distribution '" + std::string(s) + "'");
  }
  const auto kind = text::trim(s.substr(0, open));
  std::vector<std::string> args;
  for (const auto& a : text::split(s.substr(open + 1, s.size() - open - 2), ',')) {
    args.emplace_back(text::trim(a));
  }
  const auto number = [&](std::size_t i) {
    const auto v = text::parse_double(args[i]);
    if (!v) throw Error("bad number '" + args[i] + "' in distribution");
    return *v;
  };
  if (kind == "choice") {
    Choice c;
    for (const auto& a : args) {
      if (a.empty()) continue;
      if (const auto v = text::parse_double(a)) c.options.emplace_back(*v);
      else c.options.emplace_back(a);
    }
    return c;
  }
  if (args.size() != 2) throw Error("distribution '" + std::string(kind) + "' takes two bounds");
  if (kind == "uniform") return Uniform{number(0), number(1)};
  if (kind == "log_uniform") return LogUniform{number(0), number(1)};
  if (kind == "int_uniform") {
    const auto lo = text::parse_int(args[0]);
    const auto hi = text::parse_int(args[1]);
    if (!lo || !hi) throw Error("int_uniform bounds must be integers");
    return IntUniform{*lo, *hi};
  }
  throw Error("unknown distribution '" + std::string(kind) + "'");
}

std::string format_distribution(const Distribution& d) {
  if (const auto* u = std::get_if<Uniform>(&d)) {
    return "uniform(" + text::format_double(u->lo) + "," + text::format_double(u->hi) + ")";
  }
  if (const auto* u = std::get_if<LogUniform>(&d)) {
    return "log_uniform(" + text::format_double(u->lo) + "," + text::format_double(u->hi) + ")";
  }
  if (const auto* u = std::get_if<IntUniform>(&d)) {
    return "int_uniform(" + std::to_string(u->lo) + "," + std::to_string(u->hi) + ")";
  }
  std::string out = "choice(";
  const auto& c = std::get<Choice>(d);
  for (std::size_t i = 0; i < c.options.size(); ++i) out += (i ? "," : "") + value_text(c.options[i]);
  return out + ")";
}

void SearchSpace::validate() const {
  for (const auto& [name, d] : params) {
    const auto fail = [&](const std::string& why) { throw Error("search space " + name + ": " + why); };
    if (const auto* u = std::get_if<Uniform>(&d)) {
      if (!(u->lo < u->hi)) fail("lo must be < hi");
    } else if (const auto* l = std::get_if<LogUniform>(&d)) {
      if (!(l->lo > 0.0 && l->lo < l->hi)) fail("need 0 < lo < hi");
    } else if (const auto* i = std::get_if<IntUniform>(&d)) {
      if (!(i->lo < i->hi)) fail("lo must be < hi");
    } else if (std::get<Choice>(d).options.empty()) {
      fail("choice is empty");
    }
    BoostParams probe;
    const auto& dist = params.at(name);
    set_param(probe, name, std::holds_alternative<Choice>(dist) ? std::get<Choice>(dist).options.front()
                                                                : ParamValue{1.0});
  }
}

SearchSpace default_search_space(double prevalence) {
  if (!(prevalence > 0.0 && prevalence < 1.0)) throw Error("prevalence must be in (0, 1)");
  SearchSpace s;
  s.params["learning_rate"] = LogUniform{0.01, 0.3};
  s.params["max_leaves"] = IntUniform{7, 63};
  s.params["max_depth"] = IntUniform{3, 8};
  s.params["lambda"] = LogUniform{1e-2, 10.0};
  s.params["pos_weight"] = Choice{{1.0, (1.0 - prevalence) / prevalence}};
  s.params["growth"] = Choice{{std::string("leafwise"), std::string("depthwise")}};
  return s;
}

void set_param(BoostParams& p, const std::string& name, const ParamValue& v) {
  if (name == "growth") {
    const auto g = parse_growth(value_text(v));
    if (!g) throw Error("unknown growth '" + value_text(v) + "'");
    p.growth = *g;
  } else if (name == "num_trees") {
    p.num_trees = as_int(name, v);
  } else if (name == "learning_rate") {
    p.learning_rate = as_number(name, v);
  } else if (name == "max_depth") {
    p.max_depth = as_int(name, v);
  } else if (name == "max_leaves") {
    p.max_leaves = as_int(name, v);
  } else if (name == "lambda") {
    p.lambda = as_number(name, v);
  } else if (name == "gamma") {
    p.gamma = as_number(name, v);
  } else if (name == "min_child_weight") {
    p.min_child_weight = as_number(name, v);
  } else if (name == "min_samples_leaf") {
    p.min_samples_leaf = as_int(name, v);
  } else if (name == "max_bins") {
    p.max_bins = as_int(name, v);
  } else if (name == "pos_weight") {
    p.pos_weight = as_number(name, v);
  } else if (name == "subsample") {
    p.subsample = as_number(name, v);
  } else if (name == "colsample") {
    p.colsample = as_number(name, v);
  } else {
    throw Error("unknown parameter '" + name + "'");
  }
}

BoostParams sample_params(const SearchSpace& space, Rng& rng, const BoostParams& base,
                          std::map<std::string, ParamValue>* drawn) {
  BoostParams p = base;
  for (const auto& [name, d] : space.params) {
    ParamValue v;
    if (const auto* u = std::get_if<Uniform>(&d)) {
      v = rng.uniform(u->lo, u->hi);
    } else if (const auto* l = std::get_if<LogUniform>(&d)) {
      v = std::exp(rng.uniform(std::log(l->lo), std::log(l->hi)));
    } else if (const auto* i = std::get_if<IntUniform>(&d)) {
      v = static_cast<double>(rng.uniform_int(i->lo, i->hi));
    } else {
      const auto& options = std::get<Choice>(d).options;
      v = options[static_cast<std::size_t>(rng.below(options.size()))];
    }
    set_param(p, name, v);
    if (drawn != nullptr) (*drawn)[name] = v;
  }
  return p;
}

std::string params_to_json(const BoostParams& p) {
  const nlohmann::json j{{"growth", std::string(growth_name(p.growth))},
                         {"num_trees", p.num_trees},
                         {"learning_rate", p.learning_rate},
                         {"max_depth", p.max_depth},
                         {"max_leaves", p.max_leaves},
                         {"lambda", p.lambda},
                         {"gamma", p.gamma},
                         {"min_child_weight", p.min_child_weight},
                         {"min_samples_leaf", p.min_samples_leaf},
                         {"max_bins", p.max_bins},
                         {"pos_weight", p.pos_weight},
                         {"subsample", p.subsample},
                         {"colsample", p.colsample},
                         {"seed", p.seed}};
  return j.dump();
}

SearchResult random_search(const FeatureMatrix& matrix, const SearchSpace& space, int trials, int k,
                           std::uint64_t seed, const BoostParams& base, int workers,
                           const ThresholdPolicy& policy) {
  if (trials < 1) throw Error("trials must be at least 1");
  space.validate();
  SearchResult result;
  result.folds = stratified_group_kfold(matrix, k, seed);
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    TrialResult trial;
    trial.trial = t;
    trial.params = sample_params(space, rng, base);
    try {
      trial.params.validate();
      const auto cv = run_cv(matrix, trial.params, result.folds, workers, policy);
      trial.mean_auc = cv.report.mean.auc;
      trial.mean_recall = cv.report.mean.recall;
      trial.mean_train_time_s = cv.report.mean.train_time_s;
      trial.status = "ok";
    } catch (const std::exception& e) {
      trial.status = std::string("failed: ") + e.what();
    }
    if (trial.ok() && (result.best_trial < 0 ||
                       trial.mean_auc > result.trials[static_cast<std::size_t>(result.best_trial)].mean_auc)) {
      result.best_trial = t;
      result.best = trial.params;
    }
    result.trials.push_back(std::move(trial));
  }
  if (result.best_trial < 0) {
    throw Error("all " + std::to_string(trials) + " trials failed; first: " + result.trials.front().status);
  }
  return result;
}

void write_trials_csv(std::ostream& out, const SearchResult& result) {
  out << "trial,params_json,mean_auc,mean_recall,mean_train_time_s,status\n";
  for (const auto& t : result.trials) {
    out << t.trial << ',' << text::csv_escape(params_to_json(t.params)) << ','
        << text::format_cell(t.mean_auc) << ',' << text::format_cell(t.mean_recall) << ','
        << text::format_cell(t.mean_train_time_s) << ',' << text::csv_escape(t.status) << '\n';
  }
}

}  // namespace sepsis
