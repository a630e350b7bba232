// Acceptance checks, one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (capped at 1).

#include "cohorts.hpp"
#include "helpers.hpp"
#include "oracles.hpp"
#include "pipeline.hpp"
#include "tempdir.hpp"

#include "sepsis/cli.hpp"
#include "sepsis/cv.hpp"
#include "sepsis/metrics.hpp"
#include "sepsis/resample.hpp"
#include "sepsis/synth.hpp"
#include "sepsis/trees.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>

using namespace sepsis;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int cli(std::vector<std::string> args, std::string* out = nullptr) {
  args.insert(args.begin(), "sepsis");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), o, e);
  if (out != nullptr) *out = o.str();
  if (code != 0) std::cerr << "sepsis " << args[1] << " exited " << code << ": " << e.str();
  return code;
}

int failures = 0;

void report(int criterion, const std::string& title, const Verdict& v) {
  std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << criterion << ": " << title << " (" << v.detail
            << ")" << std::endl;
  if (!v.pass) ++failures;
}

template <typename Fn>
void run_criterion(int criterion, const std::string& title, Fn&& fn) {
  Verdict v;
  try {
    fn(v);
  } catch (const std::exception& e) {
    v.pass = false;
    v.note(std::string("exception: ") + e.what());
  }
  report(criterion, title, v);
}

// ---------------------------------------------------------------------------
// 1-3: the synthetic pipeline through the command line
// ---------------------------------------------------------------------------

struct PipelineRun {
  double pipeline_seconds = 0;  // synth through the leafwise cv
  EvalReport leafwise, depthwise, logistic;
  double prevalence = 0;
  std::size_t units = 0;
  std::string table;
};

PipelineRun run_synthetic_pipeline(const testing::TempDir& dir) {
  PipelineRun r;
  const auto d = [&](const std::string& name) { return dir / name; };
  const auto t0 = Clock::now();
  const auto must = [](int code, const char* what) {
    if (code != 0) throw Error(std::string(what) + " failed");
  };
  must(cli({"--seed", "7", "--preset", "eicu-like", "synth", "--out", d("cohort"), "--patients", "500"}), "synth");
  must(cli({"preprocess", "--vitals", d("cohort/vitals.csv"), "--demographics", d("cohort/demographics.csv"),
            "--onsets", d("cohort/onsets.csv"), "--out", d("pre")}),
       "preprocess");
  must(cli({"featurize", "--units", d("pre/units.csv"), "--demographics", d("cohort/demographics.csv"), "--out",
            d("features.csv")}),
       "featurize");
  must(cli({"--seed", "7", "cv", "--features", d("features.csv"), "--k", "5", "--growth", "leafwise", "--out",
            d("cv_leafwise")}),
       "cv leafwise");
  r.pipeline_seconds = seconds_since(t0);
  must(cli({"--seed", "7", "cv", "--features", d("features.csv"), "--k", "5", "--growth", "depthwise", "--out",
            d("cv_depthwise")}),
       "cv depthwise");
  must(cli({"--seed", "7", "cv", "--features", d("features.csv"), "--k", "5", "--model", "logistic", "--out",
            d("cv_logistic")}),
       "cv logistic");
  must(cli({"report", d("cv_leafwise/report.json"), d("cv_depthwise/report.json"), d("cv_logistic/report.json")},
           &r.table),
       "report");

  r.leafwise = report_from_json(testing::slurp(d("cv_leafwise/report.json")));
  r.depthwise = report_from_json(testing::slurp(d("cv_depthwise/report.json")));
  r.logistic = report_from_json(testing::slurp(d("cv_logistic/report.json")));
  std::istringstream features(testing::slurp(d("features.csv")));
  const auto m = read_feature_csv(features);
  r.units = static_cast<std::size_t>(m.rows());
  r.prevalence = m.labels.cast<double>().mean();
  return r;
}

// ---------------------------------------------------------------------------
// 4: leakage
// ---------------------------------------------------------------------------

void leakage(Verdict& v) {
  auto config = synth_preset("eicu-like");
  config.n_patients = 120;
  config.seed = 44;
  const auto cohort = generate_cohort(config);
  std::istringstream vitals(cohort.vitals_csv), demo_in(cohort.demographics_csv), onset_in(cohort.onsets_csv);
  const auto parsed = parse_vitals(vitals);
  const auto demographics = parse_demographics(demo_in);
  const auto onsets = parse_onsets(onset_in);
  const PreprocessConfig pre;
  const FeatureRecipe recipe;

  const auto pipeline = testing::run_pipeline(cohort);
  const auto& units = pipeline.preprocessed.dataset.units;
  BoostParams params;
  params.num_trees = 50;
  const auto model = train(pipeline.matrix, params);

  Rng rng(4);
  std::vector<std::size_t> picks(units.size());
  std::iota(picks.begin(), picks.end(), std::size_t{0});
  rng.shuffle(picks);
  picks.resize(std::min<std::size_t>(100, picks.size()));

  int checked = 0, feature_mismatch = 0, score_mismatch = 0, missing_units = 0, perturbed_obs = 0;
  for (const auto i : picks) {
    const auto& unit = units[i];
    auto series = parsed.series.at(unit.patient_id);
    if (const auto it = onsets.find(unit.patient_id); it != onsets.end()) series.onset_times = it->second;
    const Timestamp end = unit.end_time();
    const int mode = checked % 4;
    for (auto& channel : series.channels) {
      for (auto& o : channel) {
        if (o.time <= end) continue;
        ++perturbed_obs;
        switch (mode) {
          case 0: o.value = rng.uniform(-1e6, 1e6); break;
          case 1: o.value *= rng.uniform(0.5, 1.5); break;
          case 2: o.value = rng.bernoulli(0.5) ? 1e300 : -1e300; break;
          default: o.value += rng.normal(0, 5); break;
        }
      }
    }
    RejectionReport rejections;
    PreprocessStats stats;
    const auto redone = preprocess_patient(series, pre, rejections, stats);
    const auto match = std::find_if(redone.begin(), redone.end(),
                                    [&](const WindowUnit& u) { return u.unit_id == unit.unit_id; });
    ++checked;
    if (match == redone.end()) {
      ++missing_units;
      continue;
    }
    const auto demo_it = demographics.find(unit.patient_id);
    const Demographics* demo = demo_it == demographics.end() ? nullptr : &demo_it->second;
    const Eigen::RowVectorXd before = feature_row(unit, demo, recipe);
    const Eigen::RowVectorXd after = feature_row(*match, demo, recipe);
    if (!testing::bit_equal(before, after)) ++feature_mismatch;
    const double s0 = sigmoid(model.margin(before)), s1 = sigmoid(model.margin(after));
    if (std::memcmp(&s0, &s1, sizeof s0) != 0) ++score_mismatch;
  }
  v.require(checked == 100, "100 units checked");
  v.require(missing_units == 0, std::to_string(missing_units) + " units vanished after perturbation");
  v.require(feature_mismatch == 0, std::to_string(feature_mismatch) + " feature rows changed");
  v.require(score_mismatch == 0, std::to_string(score_mismatch) + " scores changed");
  v.require(perturbed_obs > 0, "some observations perturbed");
  v.note(std::to_string(checked) + " units, " + std::to_string(perturbed_obs) +
         " later observations perturbed, 0 bit differences expected; feature mismatches " +
         std::to_string(feature_mismatch) + ", score mismatches " + std::to_string(score_mismatch));
}

// ---------------------------------------------------------------------------
// 5: oracles
// ---------------------------------------------------------------------------

void oracles(Verdict& v) {
  constexpr int kTrials = 1000;
  Rng rng(2024);

  double auc_err = 0;
  for (int t = 0; t < kTrials; ++t) {
    const int n = static_cast<int>(rng.uniform_int(2, 400));
    const int levels = static_cast<int>(rng.uniform_int(1, 60));
    Eigen::VectorXd s(n);
    Eigen::VectorXi y(n);
    std::vector<double> sv;
    std::vector<int> yv;
    for (int i = 0; i < n; ++i) {
      y[i] = i == 0 ? 1 : i == 1 ? 0 : (rng.bernoulli(0.3) ? 1 : 0);
      s[i] = rng.bernoulli(0.5) ? static_cast<double>(rng.uniform_int(0, levels)) / levels + 0.1 * y[i] : rng.uniform();
      sv.push_back(s[i]);
      yv.push_back(y[i]);
    }
    const double a = auc(s, y);
    auc_err = std::max({auc_err, std::abs(trapezoid_area(roc_curve(s, y)) - a),
                        std::abs(oracle::pair_count_auc(sv, yv) - a)});
  }
  v.require(auc_err <= 1e-12, "(a) auc vs trapezoid/pair count within 1e-12");
  v.note("(a) max |auc - oracle| " + num(auc_err, 17));

  double stat_err = 0, dft_err = 0;
  for (int t = 0; t < kTrials; ++t) {
    const double level = rng.uniform(5, 200), spread = std::exp(rng.uniform(-4, 3));
    auto unit = testing::make_unit("p", 0, [&](std::size_t, int) { return level + spread * rng.normal(); });
    const int window = static_cast<int>(rng.uniform_int(2, kWindowSteps));
    const auto stats = rolling_stats(unit, window);
    const int k = static_cast<int>(rng.uniform_int(1, 35));
    const auto dft = dft_magnitudes(unit, k);
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      const auto col = unit.grid.col(static_cast<Eigen::Index>(c));
      const std::vector<double> all(col.data(), col.data() + col.size());
      const std::vector<double> tail(all.end() - window, all.end());
      const auto o = oracle::moments(tail);
      const auto& s = stats[c];
      for (const auto& [got, want] : {std::pair{s.mean, o.mean}, {s.std, o.std}, {s.max, o.max}, {s.min, o.min},
                                      {s.kurtosis, o.kurtosis}, {s.median, o.median}, {s.skewness, o.skewness}}) {
        stat_err = std::max(stat_err, std::abs(got - want));
      }
      dft_err = std::max(dft_err, std::abs(dft[c] - oracle::dft(all, k)));
    }
  }
  v.require(stat_err <= 1e-10, "(b) rolling stats within 1e-10");
  v.require(dft_err <= 1e-9, "(c) dft within 1e-9");
  v.note("(b) max stat error " + num(stat_err, 17) + "; (c) max dft error " + num(dft_err, 17));

  double stump_err = 0;
  int structure_mismatch = 0;
  for (int t = 0; t < kTrials; ++t) {
    const int n = static_cast<int>(rng.uniform_int(2, 200));
    const int d = static_cast<int>(rng.uniform_int(1, 5));
    const double missing = rng.bernoulli(0.5) ? 0.0 : 0.2;
    const int resolution = static_cast<int>(rng.uniform_int(2, 50));
    Eigen::MatrixXd x(n, d);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < d; ++c) {
        x(r, c) = rng.bernoulli(missing) ? kMissing : std::round(rng.normal() * resolution) / resolution;
      }
    }
    std::vector<double> g(static_cast<std::size_t>(n)), h(static_cast<std::size_t>(n));
    const double pos_weight = rng.uniform(0.5, 4);
    for (int r = 0; r < n; ++r) {
      const auto gh = logistic_grad_hess(rng.bernoulli(0.3) ? 1 : 0, rng.normal(0, 2), pos_weight);
      g[static_cast<std::size_t>(r)] = gh.g;
      h[static_cast<std::size_t>(r)] = gh.h;
    }
    BoostParams p;
    p.growth = Growth::depthwise;
    p.max_depth = 1;
    p.lambda = rng.uniform(0, 3);
    p.gamma = 0;
    p.min_child_weight = 0;
    p.min_samples_leaf = static_cast<int>(rng.uniform_int(1, 10));
    const auto tree = grow_tree(quantile_bin(x, 255), g, h, p);
    const auto o = oracle::exhaustive_stump(x, g, h, p.lambda, 0.0, 0.0, p.min_samples_leaf);
    if ((o.feature < 0) != (tree.nodes.size() == 1)) {
      ++structure_mismatch;
      continue;
    }
    if (o.feature < 0) continue;
    // Gain of the tree's split, recomputed from the rows it routes.
    const auto& root = tree.nodes[0];
    double gl = 0, hl = 0, gt = 0, ht = 0;
    for (int r = 0; r < n; ++r) {
      const double value = x(r, root.feature);
      const bool left = is_missing(value) ? root.default_direction == DefaultDirection::left : value <= root.threshold;
      if (left) {
        gl += g[static_cast<std::size_t>(r)];
        hl += h[static_cast<std::size_t>(r)];
      }
      gt += g[static_cast<std::size_t>(r)];
      ht += h[static_cast<std::size_t>(r)];
    }
    const double gain = split_gain({gl, hl, 0}, {gt - gl, ht - hl, 0}, p.lambda, 0.0);
    stump_err = std::max(stump_err, std::abs(gain - o.gain));
  }
  v.require(structure_mismatch == 0, "(d) split/no-split agrees with the exhaustive search");
  v.require(stump_err <= 1e-9, "(d) stump gain within 1e-9");
  v.note("(d) max stump gain error " + num(stump_err, 17) + " over " + std::to_string(kTrials) + " trials each");
}

// ---------------------------------------------------------------------------
// 6: gradient checks
// ---------------------------------------------------------------------------

void gradient_checks(Verdict& v) {
  Rng rng(606);
  double g_err = 0, h_err = 0;
  constexpr double e = 1e-5;
  for (int i = 0; i < 10000; ++i) {
    const int y = rng.bernoulli(0.5) ? 1 : 0;
    const double m = rng.uniform(-10, 10), w = rng.uniform(0.1, 10);
    const auto gh = logistic_grad_hess(y, m, w);
    const double dl = (weighted_logloss(y, m + e, w) - weighted_logloss(y, m - e, w)) / (2 * e);
    const double dg = (logistic_grad_hess(y, m + e, w).g - logistic_grad_hess(y, m - e, w).g) / (2 * e);
    g_err = std::max(g_err, std::abs(dl - gh.g));
    h_err = std::max(h_err, std::abs(dg - gh.h));
  }
  v.require(g_err <= 1e-6, "g within 1e-6");
  v.require(h_err <= 1e-4, "h within 1e-4");
  v.note("10000 points, max |g - dL/dm| " + num(g_err, 12) + ", max |h - dg/dm| " + num(h_err, 12));
}

// ---------------------------------------------------------------------------
// 7: fold integrity
// ---------------------------------------------------------------------------

void cv_integrity(Verdict& v) {
  Rng rng(707);
  int violations = 0, balanced = 0, balance_failures = 0;
  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int patients = static_cast<int>(rng.uniform_int(50, 400));
    const auto g = testing::grouped_labels(rng, patients, rng.uniform(0.2, 0.5), 1, 4);
    const int k = trial % 2 == 0 ? 5 : static_cast<int>(rng.uniform_int(2, 10));
    const auto folds = stratified_group_kfold(g.patient_ids, g.labels, k, rng.next());
    const auto rows = folds.row_folds(g.patient_ids);
    std::map<std::string, std::set<int>> seen;
    for (std::size_t i = 0; i < rows.size(); ++i) seen[g.patient_ids[i]].insert(rows[i]);
    for (const auto& [id, f] : seen) {
      if (f.size() != 1 || *f.begin() < 0 || *f.begin() >= k) ++violations;
    }
    if (folds.fold_of.size() != seen.size()) ++violations;
    if (k == 5 && g.positive_patients >= 20 && g.negative_patients >= 20) {
      ++balanced;
      const double dev = testing::max_rate_deviation(g, rows, k);
      worst = std::max(worst, dev);
      if (dev > 0.05) ++balance_failures;
    }
  }
  v.require(violations == 0, std::to_string(violations) + " group violations");
  v.require(balanced >= 50, "enough balanced cohorts");
  v.require(balance_failures == 0, std::to_string(balance_failures) + " balanced cohorts deviate > 0.05");
  v.note("200 cohorts, 0 group violations expected, found " + std::to_string(violations) + "; " +
         std::to_string(balanced) + " balanced cohorts at k=5, worst fold-rate deviation " + num(worst));
}

// ---------------------------------------------------------------------------
// 8: determinism
// ---------------------------------------------------------------------------

// report.json with the wall-clock fields removed.
std::string timeless_report(const std::string& path) {
  auto j = nlohmann::json::parse(testing::slurp(path));
  for (auto& f : j.at("folds")) f.erase("train_time_s");
  j.at("mean").erase("train_time_s");
  j.at("pooled").erase("train_time_s");
  return j.dump();
}

std::map<std::string, std::string> pipeline_outputs(const testing::TempDir& dir, const std::string& tag,
                                                    const std::string& workers) {
  const auto d = [&](const std::string& name) { return dir / (tag + "/" + name); };
  const std::vector<std::string> global{"--seed", "19", "--workers", workers};
  const auto run = [&](std::vector<std::string> args) {
    args.insert(args.begin(), global.begin(), global.end());
    if (cli(args) != 0) throw Error("pipeline step '" + args[4] + "' failed");
  };
  run({"synth", "--out", d("cohort"), "--patients", "120"});
  run({"preprocess", "--vitals", d("cohort/vitals.csv"), "--demographics", d("cohort/demographics.csv"), "--onsets",
       d("cohort/onsets.csv"), "--out", d("pre")});
  run({"featurize", "--units", d("pre/units.csv"), "--demographics", d("cohort/demographics.csv"), "--out",
       d("features.csv")});
  run({"train", "--features", d("features.csv"), "--out", d("model.txt"), "--subsample", "0.8", "--colsample",
       "0.7"});
  run({"predict", "--model-file", d("model.txt"), "--features", d("features.csv"), "--out", d("pred.csv")});
  run({"cv", "--features", d("features.csv"), "--out", d("cv"), "--k", "5", "--growth", "depthwise"});
  run({"tune", "--features", d("features.csv"), "--out", d("tune"), "--trials", "2", "--k", "3", "--num-trees",
       "20"});

  std::map<std::string, std::string> files;
  for (const char* f : {"cohort/vitals.csv", "cohort/demographics.csv", "cohort/onsets.csv", "pre/units.csv",
                        "pre/units_summary.csv", "pre/preprocess_stats.json", "features.csv", "model.txt", "pred.csv",
                        "cv/oof.csv", "cv/roc.csv", "tune/best_params.conf"}) {
    files[f] = testing::slurp(d(f));
  }
  files["cv/report.json (timings removed)"] = timeless_report(d("cv/report.json"));
  // trials.csv carries mean_train_time_s; compare every other column.
  std::istringstream trials(testing::slurp(d("tune/trials.csv")));
  std::string line, kept;
  while (std::getline(trials, line)) kept += line.substr(0, line.rfind(',', line.rfind(',') - 1)) + "\n";
  files["tune/trials.csv (timings removed)"] = kept;
  return files;
}

void determinism(Verdict& v) {
  testing::TempDir dir("determinism");
  const auto one = pipeline_outputs(dir, "w1", "1");
  const auto eight = pipeline_outputs(dir, "w8", "8");
  const auto again = pipeline_outputs(dir, "w1b", "1");
  int differing = 0;
  for (const auto& [name, content] : one) {
    if (content.empty()) v.require(false, name + " is empty");
    if (eight.at(name) != content) {
      ++differing;
      v.require(false, name + " differs between --workers 1 and 8");
    }
    if (again.at(name) != content) {
      ++differing;
      v.require(false, name + " differs between identical runs");
    }
  }

  // Save/load round trip.
  std::istringstream features(one.at("features.csv"));
  const auto m = read_feature_csv(features);
  std::istringstream model_text(one.at("model.txt"));
  const auto model = load_model(model_text);
  std::ostringstream saved;
  save_model(saved, model);
  std::istringstream reread(saved.str());
  const auto model2 = load_model(reread);
  v.require(saved.str() == one.at("model.txt"), "model text round trip");
  v.require(testing::bit_equal(model.predict_proba(m), model2.predict_proba(m)), "save/load predictions");
  BoostParams direct = model.params;
  const auto trained = train(m, direct, 1);
  v.require(testing::bit_equal(trained.predict_proba(m), model.predict_proba(m)), "in-process training equals CLI");

  v.note(std::to_string(one.size()) + " output files compared across 3 runs (workers 1, 8, 1), " +
         std::to_string(differing) + " differences; save/load predictions bit-identical");
}

// ---------------------------------------------------------------------------
// 9: training speed
// ---------------------------------------------------------------------------

void performance(Verdict& v, const PipelineRun* run) {
  Rng rng(909);
  FeatureMatrix m;
  const int rows = 10000, cols = 138;
  m.values.resize(rows, cols);
  m.labels.resize(rows);
  for (int c = 0; c < cols; ++c) m.columns.push_back("f" + std::to_string(c));
  for (int r = 0; r < rows; ++r) {
    double z = 0;
    for (int c = 0; c < cols; ++c) {
      const double x = rng.normal(50, 10);
      m.values(r, c) = rng.bernoulli(0.02) ? kMissing : x;
      if (c < 6) z += (x - 50) / 10 * (c % 2 == 0 ? 1 : -1);
    }
    m.labels[r] = z + (m.values(r, 7) > 55 ? 1.5 : 0) + rng.normal() > 1.2 ? 1 : 0;
    m.unit_ids.push_back("u" + std::to_string(r));
    m.patient_ids.push_back("p" + std::to_string(r / 3));
  }
  BoostParams p;
  p.num_trees = 100;
  p.max_leaves = 31;
  p.growth = Growth::leafwise;
  auto t0 = Clock::now();
  train(m, p, 1);
  const double leafwise = seconds_since(t0);
  p.growth = Growth::depthwise;
  t0 = Clock::now();
  train(m, p, 1);
  const double depthwise = seconds_since(t0);
  v.require(leafwise <= 10.0, "leafwise training within 10 s");
  v.note("10000 x 138, 100 trees, 1 thread: leafwise (31 leaves) " + num(leafwise, 2) + " s, depthwise (depth 6) " +
         num(depthwise, 2) + " s");
  if (run != nullptr) {
    const bool reported = run->leafwise.folds.size() == 5 && run->depthwise.folds.size() == 5;
    v.require(reported && run->leafwise.mean.train_time_s > 0 && run->depthwise.mean.train_time_s > 0,
              "EvalReports carry fold training times");
    v.note("EvalReport mean fold train time: leafwise " + num(run->leafwise.mean.train_time_s, 3) +
           " s, depthwise " + num(run->depthwise.mean.train_time_s, 3) + " s");
  }
}

}  // namespace

int main() {
  std::optional<PipelineRun> run;
  std::string pipeline_error;
  testing::TempDir dir("acceptance");
  try {
    run = run_synthetic_pipeline(dir);
  } catch (const std::exception& e) {
    pipeline_error = e.what();
  }

  run_criterion(1, "synthetic pipeline, eicu-like, 500 patients, seed 7, k=5", [&](Verdict& v) {
    if (!run) throw Error(pipeline_error);
    const double leaf = run->leafwise.pooled.auc, depth = run->depthwise.pooled.auc, lin = run->logistic.pooled.auc;
    const double gap = std::min(leaf, depth) - lin;
    v.require(run->pipeline_seconds <= 120.0, "pipeline within 120 s");
    v.require(leaf >= 0.90, "leafwise pooled AUC >= 0.90");
    v.require(depth >= 0.90, "depthwise pooled AUC >= 0.90");
    v.require(gap >= 0.08, "logistic trails GBDT by >= 0.08");
    v.note("pooled AUC leafwise " + num(leaf) + ", depthwise " + num(depth) + ", logistic " + num(lin) +
           ", gap " + num(gap) + ", synth->cv " + num(run->pipeline_seconds, 1) + " s on 1 core");
  });

  run_criterion(2, "unit prevalence 0.244 +/- 0.02", [&](Verdict& v) {
    if (!run) throw Error(pipeline_error);
    v.require(std::abs(run->prevalence - 0.244) <= 0.02, "prevalence within tolerance");
    v.note("prevalence " + num(run->prevalence) + " over " + std::to_string(run->units) + " units");
  });

  run_criterion(3, "f1 arithmetic and report table columns", [&](Verdict& v) {
    const double f1 = f1_score(0.839, 0.827);
    v.require(std::abs(f1 - 0.833) <= 0.002, "f1(0.839, 0.827) = 0.833 +/- 0.002");
    const std::string table = run ? run->table : render_report_table({});
    for (const char* col : {"Model", "AUC", "Precision", "Recall", "F-1 Score", "Time(s)"}) {
      v.require(table.find(col) != std::string::npos, std::string("column ") + col);
    }
    v.note("f1 " + num(f1, 6) + ", columns Model/AUC/Precision/Recall/F-1 Score/Time(s) present");
    if (run) std::cout << run->table;
  });

  run_criterion(4, "no look-ahead on 100 units", leakage);
  run_criterion(5, "oracle equivalences", oracles);
  run_criterion(6, "gradient and hessian finite differences", gradient_checks);
  run_criterion(7, "grouped stratified fold integrity", cv_integrity);
  run_criterion(8, "determinism across workers and runs, save/load", determinism);
  run_criterion(9, "training speed", [&](Verdict& v) { performance(v, run ? &*run : nullptr); });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
