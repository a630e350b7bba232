#include "sepsis/config.hpp"

#include "sepsis/metrics.hpp"
#include "sepsis/text.hpp"

#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>

namespace sepsis {

namespace {

using Setter = std::function<void(RunConfig&, std::string_view)>;

[[noreturn]] void mismatch(std::string_view expected, std::string_view value) {
  throw Error("expected " + std::string(expected) + ", got '" + std::string(value) + "'");
}

long long to_int(std::string_view v, long long lo = std::numeric_limits<int>::min(),
                 long long hi = std::numeric_limits<int>::max()) {
  const auto n = text::parse_int(v);
  if (!n || *n < lo || *n > hi) mismatch("an integer", v);
  return *n;
}

double to_double(std::string_view v) {
  const auto d = text::parse_double(v);
  if (!d || std::isnan(*d)) mismatch("a number", v);
  return *d;
}

bool to_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  mismatch("true or false", v);
}

std::vector<int> to_int_list(std::string_view v) {
  std::vector<int> out;
  for (const auto& part : text::split(v, ',')) {
    const auto t = text::trim(part);
    if (!t.empty()) out.push_back(static_cast<int>(to_int(t)));
  }
  return out;
}

std::vector<std::string> to_string_list(std::string_view v) {
  std::vector<std::string> out;
  for (const auto& part : text::split(v, ',')) {
    const auto t = text::trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = [] {
    std::map<std::string, Setter, std::less<>> t;
    t["vitals"] = [](RunConfig& c, std::string_view v) { c.vitals = v; };
    t["demographics"] = [](RunConfig& c, std::string_view v) { c.demographics = v; };
    t["onsets"] = [](RunConfig& c, std::string_view v) { c.onsets = v; };
    t["output_dir"] = [](RunConfig& c, std::string_view v) { c.output_dir = v; };
    t["preset"] = [](RunConfig& c, std::string_view v) {
      if (v != "eicu-like" && v != "hospital-like") mismatch("eicu-like or hospital-like", v);
      c.preset = v;
    };
    t["k"] = [](RunConfig& c, std::string_view v) { c.k = static_cast<int>(to_int(v, 2)); };
    t["seed"] = [](RunConfig& c, std::string_view v) {
      c.seed = static_cast<std::uint64_t>(to_int(v, 0, std::numeric_limits<long long>::max()));
    };
    t["workers"] = [](RunConfig& c, std::string_view v) { c.workers = static_cast<int>(to_int(v, 1, 1024)); };
    t["trials"] = [](RunConfig& c, std::string_view v) { c.trials = static_cast<int>(to_int(v, 1)); };
    t["threshold_policy"] = [](RunConfig& c, std::string_view v) {
      parse_threshold_policy(v);
      c.threshold_policy = v;
    };
    t["model"] = [](RunConfig& c, std::string_view v) {
      if (v != "gbdt" && v != "logistic") mismatch("gbdt or logistic", v);
      c.model = v;
    };
    t["lags"] = [](RunConfig& c, std::string_view v) { c.recipe.lag_steps = to_int_list(v); };
    t["diffs"] = [](RunConfig& c, std::string_view v) { c.recipe.diff_steps = to_int_list(v); };
    t["stat_windows"] = [](RunConfig& c, std::string_view v) { c.recipe.stat_window_steps = to_int_list(v); };
    t["stats"] = [](RunConfig& c, std::string_view v) {
      std::vector<Stat> stats;
      for (const auto& name : to_string_list(v)) {
        const auto s = parse_stat(name);
        if (!s) mismatch("a statistic name", name);
        stats.push_back(*s);
      }
      c.recipe.stats = stats;
    };
    t["dft_harmonics"] = [](RunConfig& c, std::string_view v) {
      c.recipe.dft_harmonics = static_cast<int>(to_int(v, 0));
    };
    t["include_demographics"] = [](RunConfig& c, std::string_view v) {
      c.recipe.include_demographics = to_bool(v);
    };
    t["ethnicities"] = [](RunConfig& c, std::string_view v) { c.recipe.ethnicities = to_string_list(v); };
    t["include_qsofa"] = [](RunConfig& c, std::string_view v) { c.recipe.include_qsofa = to_bool(v); };
    t["growth"] = [](RunConfig& c, std::string_view v) {
      const auto g = parse_growth(v);
      if (!g) mismatch("leafwise or depthwise", v);
      c.boost.growth = *g;
    };
    t["num_trees"] = [](RunConfig& c, std::string_view v) { c.boost.num_trees = static_cast<int>(to_int(v)); };
    t["learning_rate"] = [](RunConfig& c, std::string_view v) { c.boost.learning_rate = to_double(v); };
    t["max_depth"] = [](RunConfig& c, std::string_view v) { c.boost.max_depth = static_cast<int>(to_int(v)); };
    t["max_leaves"] = [](RunConfig& c, std::string_view v) { c.boost.max_leaves = static_cast<int>(to_int(v)); };
    t["lambda"] = [](RunConfig& c, std::string_view v) { c.boost.lambda = to_double(v); };
    t["gamma"] = [](RunConfig& c, std::string_view v) { c.boost.gamma = to_double(v); };
    t["min_child_weight"] = [](RunConfig& c, std::string_view v) { c.boost.min_child_weight = to_double(v); };
    t["min_samples_leaf"] = [](RunConfig& c, std::string_view v) {
      c.boost.min_samples_leaf = static_cast<int>(to_int(v));
    };
    t["max_bins"] = [](RunConfig& c, std::string_view v) { c.boost.max_bins = static_cast<int>(to_int(v)); };
    t["pos_weight"] = [](RunConfig& c, std::string_view v) { c.boost.pos_weight = to_double(v); };
    t["subsample"] = [](RunConfig& c, std::string_view v) { c.boost.subsample = to_double(v); };
    t["colsample"] = [](RunConfig& c, std::string_view v) { c.boost.colsample = to_double(v); };
    t["logistic_l2"] = [](RunConfig& c, std::string_view v) { c.logistic.l2 = to_double(v); };
    t["logistic_epochs"] = [](RunConfig& c, std::string_view v) {
      c.logistic.epochs = static_cast<int>(to_int(v, 0));
    };
    t["logistic_step"] = [](RunConfig& c, std::string_view v) { c.logistic.step = to_double(v); };
    t["min_obs_per_channel"] = [](RunConfig& c, std::string_view v) {
      c.validity.min_obs_per_channel = static_cast<int>(to_int(v, 0));
    };
    t["gcs_optional"] = [](RunConfig& c, std::string_view v) { c.validity.gcs_optional = to_bool(v); };
    return t;
  }();
  return table;
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, s] : setters()) keys.push_back(k);
  return keys;
}

void apply_setting(RunConfig& config, std::string_view key, std::string_view value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw Error("unknown key '" + std::string(key) + "'");
  try {
    it->second(config, text::trim(value));
  } catch (const Error& e) {
    throw Error(std::string(key) + ": " + e.what());
  }
}

RunConfig parse_config(std::istream& in, RunConfig base) {
  std::set<std::string, std::less<>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto where = "config line " + std::to_string(line_no) + ": ";
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = text::trim(body);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw Error(where + "expected 'key = value'");
    const auto key = text::trim(body.substr(0, eq));
    const auto value = text::trim(body.substr(eq + 1));
    if (!seen.emplace(key).second) throw Error(where + "duplicate key '" + std::string(key) + "'");
    try {
      apply_setting(base, key, value);
    } catch (const Error& e) {
      throw Error(where + e.what());
    }
  }
  return base;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  try {
    return parse_config(in, std::move(base));
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

std::string boost_params_config(const BoostParams& p) {
  std::string out;
  const auto line = [&](const char* key, const std::string& value) { out += std::string(key) + " = " + value + "\n"; };
  line("growth", std::string(growth_name(p.growth)));
  line("num_trees", std::to_string(p.num_trees));
  line("learning_rate", text::format_double(p.learning_rate));
  line("max_depth", std::to_string(p.max_depth));
  line("max_leaves", std::to_string(p.max_leaves));
  line("lambda", text::format_double(p.lambda));
  line("gamma", text::format_double(p.gamma));
  line("min_child_weight", text::format_double(p.min_child_weight));
  line("min_samples_leaf", std::to_string(p.min_samples_leaf));
  line("max_bins", std::to_string(p.max_bins));
  line("pos_weight", text::format_double(p.pos_weight));
  line("subsample", text::format_double(p.subsample));
  line("colsample", text::format_double(p.colsample));
  return out;
}

}  // namespace sepsis
