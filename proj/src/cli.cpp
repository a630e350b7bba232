#include "sepsis/cli.hpp"

#include "sepsis/config.hpp"
#include "sepsis/cv.hpp"
#include "sepsis/dataset_io.hpp"
#include "sepsis/features.hpp"
#include "sepsis/ingest.hpp"
#include "sepsis/metrics.hpp"
#include "sepsis/resample.hpp"
#include "sepsis/synth.hpp"
#include "sepsis/text.hpp"
#include "sepsis/trees.hpp"
#include "sepsis/tune.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace sepsis {

namespace {

namespace fs = std::filesystem;

std::ifstream open_input(const std::string& path, const char* what) {
  if (path.empty()) throw Error(std::string("no ") + what + " file given");
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + std::string(what) + " file '" + path + "'");
  return in;
}

std::string read_file(const std::string& path, const char* what) {
  auto in = open_input(path, what);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

template <typename Fn>
std::string render(Fn&& fn) {
  std::ostringstream out;
  fn(out);
  return out.str();
}

fs::path require_dir(const RunConfig& c) {
  if (c.output_dir.empty()) throw Error("no output given (--out)");
  fs::create_directories(c.output_dir);
  return fs::path(c.output_dir);
}

std::string flag_name(const std::string& key) {
  std::string f = "--" + key;
  for (auto& ch : f) {
    if (ch == '_') ch = '-';
  }
  return f;
}

// Options that map onto config keys; applied over the config file.
struct Overrides {
  std::map<std::string, std::string> values;
  std::vector<std::string> sets;

  void add(CLI::App* app, const std::string& key, const std::string& help) {
    app->add_option(flag_name(key), values[key], help);
  }
  void add(CLI::App* app, const std::string& key, const std::string& alias, const std::string& help) {
    app->add_option(flag_name(key) + "," + alias, values[key], help);
  }
};

const std::vector<std::string> kBoostKeys{"growth",     "num_trees",        "learning_rate", "max_depth",
                                          "max_leaves", "lambda",           "gamma",         "min_child_weight",
                                          "min_samples_leaf", "max_bins",   "pos_weight",    "subsample",
                                          "colsample"};
const std::vector<std::string> kRecipeKeys{"lags",         "diffs",        "stat_windows", "stats", "dft_harmonics",
                                           "include_demographics", "ethnicities", "include_qsofa"};

PreprocessConfig preprocess_config(const RunConfig& c) {
  PreprocessConfig p;
  p.validity = c.validity;
  return p;
}

FeatureMatrix load_features(const std::string& path) {
  auto in = open_input(path, "features");
  return read_feature_csv(in);
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct SynthArgs {
  std::optional<std::size_t> patients;
  std::optional<double> prevalence;
  std::optional<double> interaction;
};

int cmd_synth(const RunConfig& c, const SynthArgs& a, std::ostream& out) {
  auto cfg = synth_preset(c.preset);
  cfg.seed = c.seed;
  if (a.patients) cfg.n_patients = *a.patients;
  if (a.prevalence) cfg.target_unit_prevalence = *a.prevalence;
  if (a.interaction) cfg.interaction_strength = *a.interaction;
  const auto dir = require_dir(c);
  const auto cohort = generate_cohort(cfg, c.workers);
  write_file(dir / "vitals.csv", cohort.vitals_csv);
  write_file(dir / "demographics.csv", cohort.demographics_csv);
  write_file(dir / "onsets.csv", cohort.onsets_csv);
  out << "patients: " << cfg.n_patients << "\nsepsis_patients: " << cohort.sepsis_patients
      << "\nplanned_units: " << cohort.planned_units << "\nwrote " << dir.string() << '\n';
  return 0;
}

int cmd_describe(const RunConfig& c, std::ostream& out) {
  auto vitals = open_input(c.vitals, "vitals");
  std::istringstream none_demo("patient_id\n"), none_onsets("patient_id,onset_timestamp\n");
  std::ifstream demo_file, onset_file;
  if (!c.demographics.empty()) demo_file = open_input(c.demographics, "demographics");
  if (!c.onsets.empty()) onset_file = open_input(c.onsets, "onsets");
  std::istream& demo = c.demographics.empty() ? static_cast<std::istream&>(none_demo) : demo_file;
  std::istream& onsets = c.onsets.empty() ? static_cast<std::istream&>(none_onsets) : onset_file;
  out << render_summary(describe_cohort(vitals, demo, onsets, preprocess_config(c), c.workers));
  return 0;
}

int cmd_preprocess(const RunConfig& c, std::ostream& out) {
  auto vitals_in = open_input(c.vitals, "vitals");
  auto parsed = parse_vitals(vitals_in);
  std::map<std::string, std::vector<Timestamp>> onsets;
  if (!c.onsets.empty()) {
    auto in = open_input(c.onsets, "onsets");
    onsets = parse_onsets(in);
  }
  std::map<std::string, Demographics> demo;
  if (!c.demographics.empty()) {
    auto in = open_input(c.demographics, "demographics");
    demo = parse_demographics(in);
  }
  auto result = preprocess_cohort(parsed.series, onsets, demo, preprocess_config(c), c.workers);
  result.rejections.merge(parsed.report);

  const auto dir = require_dir(c);
  write_file(dir / "units.csv", render([&](std::ostream& o) { write_units_csv(o, result.dataset); }));
  write_file(dir / "units_summary.csv",
             render([&](std::ostream& o) { write_units_summary_csv(o, result.dataset); }));

  const auto& st = result.stats;
  const auto& rj = result.rejections;
  nlohmann::json j{{"patients", st.patients},
                   {"patients_without_data", st.patients_without_data},
                   {"units_segmented", st.units_segmented},
                   {"units_dropped_post_onset", st.units_dropped_post_onset},
                   {"units_rejected", st.units_rejected},
                   {"units_accepted", st.units_accepted},
                   {"rejections_by_reason", st.rejections_by_reason},
                   {"rows_rejected",
                    {{"malformed", rj.malformed},
                     {"non_finite", rj.non_finite},
                     {"out_of_range", rj.out_of_range},
                     {"duplicate_timestamp", rj.duplicate_timestamp}}},
                   {"rejected_units_by_patient", rj.rejected_units}};
  write_file(dir / "preprocess_stats.json", j.dump(2) + "\n");
  out << "units: " << st.units_accepted << " (rejected " << st.units_rejected << ", post-onset dropped "
      << st.units_dropped_post_onset << ")\n";
  if (!result.dataset.units.empty()) {
    out << "prevalence: " << text::format_double(prevalence(result.dataset), 4) << '\n';
  }
  return 0;
}

int cmd_featurize(const RunConfig& c, const std::string& units_path, std::string summary_path,
                  const std::string& out_path, std::ostream& out) {
  if (summary_path.empty()) summary_path = (fs::path(units_path).parent_path() / "units_summary.csv").string();
  auto units_in = open_input(units_path, "units");
  auto summary_in = open_input(summary_path, "units summary");
  auto dataset = read_units(units_in, summary_in);
  if (!c.demographics.empty()) {
    auto in = open_input(c.demographics, "demographics");
    dataset.demographics = parse_demographics(in);
  }
  const auto matrix = build_feature_matrix(dataset, c.recipe, c.workers);
  if (out_path.empty()) throw Error("no output given (--out)");
  write_file(out_path, render([&](std::ostream& o) { write_feature_csv(o, matrix); }));
  out << "features: " << matrix.rows() << " x " << matrix.cols() << '\n';
  return 0;
}

int cmd_train(const RunConfig& c, const std::string& features, const std::string& out_path, std::ostream& out) {
  if (c.model != "gbdt") throw Error("train saves boosted models only; use --model gbdt");
  const auto matrix = load_features(features);
  if (out_path.empty()) throw Error("no output given (--out)");
  const auto model = train(matrix, c.boost, c.workers);
  write_file(out_path, render([&](std::ostream& o) { save_model(o, model); }));
  out << "trees: " << model.trees.size() << '\n';
  return 0;
}

int cmd_cv(const RunConfig& c, const std::string& features, std::ostream& out) {
  const auto matrix = load_features(features);
  const auto policy = parse_threshold_policy(c.threshold_policy);
  const auto folds = stratified_group_kfold(matrix, c.k, c.seed);
  const auto result = c.model == "logistic" ? run_cv_logistic(matrix, c.logistic, folds, policy)
                                            : run_cv(matrix, c.boost, folds, c.workers, policy);
  const auto dir = require_dir(c);
  write_file(dir / "report.json", report_to_json(result.report));
  write_file(dir / "oof.csv", render([&](std::ostream& o) { write_oof_csv(o, matrix, result); }));
  write_file(dir / "roc.csv", render([&](std::ostream& o) { write_roc_csv(o, result.report.roc_points); }));
  out << render_report_table({result.report});
  return 0;
}

int cmd_tune(const RunConfig& c, const std::string& features, std::ostream& out) {
  const auto matrix = load_features(features);
  const double p = static_cast<double>((matrix.labels.array() == 1).count()) / static_cast<double>(matrix.rows());
  const auto space = default_search_space(p);
  const auto result = random_search(matrix, space, c.trials, c.k, c.seed, c.boost, c.workers,
                                    parse_threshold_policy(c.threshold_policy));
  const auto dir = require_dir(c);
  write_file(dir / "trials.csv", render([&](std::ostream& o) { write_trials_csv(o, result); }));
  write_file(dir / "best_params.conf", boost_params_config(result.best));
  const auto& best = result.trials[static_cast<std::size_t>(result.best_trial)];
  out << "best trial: " << best.trial << " mean_auc " << text::format_double(best.mean_auc, 4) << '\n';
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& features, const std::string& out_path,
                std::ostream& out) {
  auto in = open_input(model_path, "model");
  const auto model = load_model(in);
  const auto matrix = load_features(features);
  const auto scores = model.predict_proba(matrix);
  if (out_path.empty()) throw Error("no output given (--out)");
  write_file(out_path, render([&](std::ostream& o) {
               o << "unit_id,patient_id,label,score\n";
               for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
                 const auto i = static_cast<std::size_t>(r);
                 o << text::csv_escape(matrix.unit_ids[i]) << ',' << text::csv_escape(matrix.patient_ids[i]) << ','
                   << matrix.labels[r] << ',' << text::format_double(scores[r]) << '\n';
               }
             }));
  out << "predictions: " << matrix.rows() << '\n';
  return 0;
}

std::vector<RocPoint> roc_from_scores_csv(const std::string& path) {
  auto in = open_input(path, "scores");
  std::string line;
  if (!std::getline(in, line)) throw Error(path + ": missing header row");
  const auto header = text::split_csv(line);
  std::optional<std::size_t> label_col, score_col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (text::trim(header[i]) == "label") label_col = i;
    if (text::trim(header[i]) == "score") score_col = i;
  }
  if (!label_col || !score_col) throw Error(path + ": needs label and score columns");
  std::vector<double> scores;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto cells = text::split_csv(line);
    const auto s = cells.size() == header.size() ? text::parse_double(cells[*score_col]) : std::nullopt;
    const auto l = cells.size() == header.size() ? text::parse_int(cells[*label_col]) : std::nullopt;
    if (!s || !l) throw Error(path + " line " + std::to_string(line_no) + ": bad row");
    scores.push_back(*s);
    labels.push_back(static_cast<int>(*l));
  }
  const Eigen::Map<const Eigen::VectorXd> sv(scores.data(), static_cast<Eigen::Index>(scores.size()));
  const Eigen::Map<const Eigen::VectorXi> lv(labels.data(), static_cast<Eigen::Index>(labels.size()));
  return roc_curve(sv, lv);
}

int cmd_roc_export(const std::string& report, const std::string& scores, const std::string& out_path,
                   std::ostream& out) {
  if (report.empty() == scores.empty()) throw Error("give exactly one of --report or --scores");
  const auto roc = report.empty() ? roc_from_scores_csv(scores)
                                  : report_from_json(read_file(report, "report")).roc_points;
  if (out_path.empty()) throw Error("no output given (--out)");
  write_file(out_path, render([&](std::ostream& o) { write_roc_csv(o, roc); }));
  out << "roc points: " << roc.size() << '\n';
  return 0;
}

int cmd_report(const std::vector<std::string>& paths, const std::string& out_path, std::ostream& out) {
  std::vector<EvalReport> reports;
  for (const auto& p : paths) reports.push_back(report_from_json(read_file(p, "report")));
  const auto table = render_report_table(reports);
  if (!out_path.empty()) write_file(out_path, table);
  out << table;
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sepsis early-detection pipeline: synthetic cohorts, preprocessing, features, boosted trees, evaluation.",
               "sepsis"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  std::string config_path;
  Overrides global;
  app.add_option("--config", config_path, "Config file of key = value lines");
  global.add(&app, "seed", "Seed for generation, folds and boosting");
  global.add(&app, "workers", "Worker threads (never changes results)");
  global.add(&app, "preset", "Synthetic cohort profile: eicu-like | hospital-like");
  app.add_option("--set", global.sets, "Any config key as key=value (repeatable)");

  Overrides local;
  SynthArgs synth_args;
  std::string units_path, summary_path, features_path, out_path, model_path, report_path, scores_path;
  std::vector<std::string> report_paths;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort (vitals, demographics, onsets CSV)");
  local.add(synth, "output_dir", "--out", "Output directory");
  synth->add_option("--patients", synth_args.patients, "Number of patients");
  synth->add_option("--prevalence", synth_args.prevalence, "Target positive-unit prevalence");
  synth->add_option("--interaction-strength", synth_args.interaction, "0 = additive risk, 1 = interaction only");

  auto* describe = app.add_subcommand("describe", "Summarize a cohort after preprocessing");
  for (auto* sub : {describe}) {
    local.add(sub, "vitals", "Vitals CSV");
    local.add(sub, "demographics", "Demographics CSV");
    local.add(sub, "onsets", "Onset CSV");
  }

  auto* preprocess = app.add_subcommand("preprocess", "Resample, window, label and validate units");
  local.add(preprocess, "vitals", "Vitals CSV");
  local.add(preprocess, "demographics", "Demographics CSV");
  local.add(preprocess, "onsets", "Onset CSV");
  local.add(preprocess, "output_dir", "--out", "Output directory");
  local.add(preprocess, "min_obs_per_channel", "Raw observations required per channel and unit");
  local.add(preprocess, "gcs_optional", "Accept units without GCS observations");

  auto* featurize = app.add_subcommand("featurize", "Build the feature matrix from preprocessed units");
  featurize->add_option("--units", units_path, "units.csv")->required();
  featurize->add_option("--summary", summary_path, "units_summary.csv (default: next to --units)");
  featurize->add_option("--out", out_path, "Feature CSV to write")->required();
  local.add(featurize, "demographics", "Demographics CSV");
  for (const auto& k : kRecipeKeys) local.add(featurize, k, "Feature recipe: " + k);

  auto* train_cmd = app.add_subcommand("train", "Train a boosted model on a feature CSV");
  train_cmd->add_option("--features", features_path, "Feature CSV")->required();
  train_cmd->add_option("--out", out_path, "Model file to write")->required();

  auto* cv = app.add_subcommand("cv", "Grouped stratified cross-validation");
  cv->add_option("--features", features_path, "Feature CSV")->required();
  local.add(cv, "output_dir", "--out", "Output directory");
  local.add(cv, "k", "Number of folds");

  auto* tune = app.add_subcommand("tune", "Random search over boosting parameters");
  tune->add_option("--features", features_path, "Feature CSV")->required();
  local.add(tune, "output_dir", "--out", "Output directory");
  local.add(tune, "k", "Number of folds");
  local.add(tune, "trials", "Number of trials");

  for (auto* sub : {train_cmd, cv, tune}) {
    for (const auto& k : kBoostKeys) local.add(sub, k, "Boosting: " + k);
  }
  for (auto* sub : {cv, tune}) local.add(sub, "threshold_policy", "max_f1 | recall_at_least:<r> | fixed:<t>");
  for (auto* sub : {train_cmd, cv}) local.add(sub, "model", "gbdt | logistic");

  auto* predict = app.add_subcommand("predict", "Score a feature CSV with a saved model");
  predict->add_option("--model-file", model_path, "Model file")->required();
  predict->add_option("--features", features_path, "Feature CSV")->required();
  predict->add_option("--out", out_path, "Predictions CSV to write")->required();

  auto* roc = app.add_subcommand("roc-export", "Write ROC points as threshold,fpr,tpr");
  roc->add_option("--report", report_path, "report.json from cv");
  roc->add_option("--scores", scores_path, "CSV with label and score columns");
  roc->add_option("--out", out_path, "ROC CSV to write")->required();

  auto* report = app.add_subcommand("report", "Render reports as a comparison table");
  report->add_option("reports", report_paths, "report.json files")->required();
  report->add_option("--out", out_path, "Also write the table here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    RunConfig config;
    if (!config_path.empty()) config = load_config(config_path);
    const auto apply = [&](const Overrides& o) {
      for (const auto& [key, value] : o.values) {
        if (!value.empty()) apply_setting(config, key, value);
      }
      for (const auto& kv : o.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw Error("--set expects key=value, got '" + kv + "'");
        apply_setting(config, text::trim(std::string_view(kv).substr(0, eq)),
                      std::string_view(kv).substr(eq + 1));
      }
    };
    apply(global);
    apply(local);
    config.boost.seed = config.seed;

    if (*synth) return cmd_synth(config, synth_args, out);
    if (*describe) return cmd_describe(config, out);
    if (*preprocess) return cmd_preprocess(config, out);
    if (*featurize) return cmd_featurize(config, units_path, summary_path, out_path, out);
    if (*train_cmd) return cmd_train(config, features_path, out_path, out);
    if (*cv) return cmd_cv(config, features_path, out);
    if (*tune) return cmd_tune(config, features_path, out);
    if (*predict) return cmd_predict(model_path, features_path, out_path, out);
    if (*roc) return cmd_roc_export(report_path, scores_path, out_path, out);
    if (*report) return cmd_report(report_paths, out_path, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace sepsis
