#include "sepsis/metrics.hpp"

#include "sepsis/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace sepsis {

namespace {

struct ClassCounts {
  std::int64_t positives = 0;
  std::int64_t negatives = 0;
};

ClassCounts count_classes(const ScoreVector& scores, const LabelVector& labels) {
  if (scores.size() != labels.size()) throw Error("scores and labels differ in length");
  ClassCounts c;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (std::isnan(scores[i])) throw Error("score is NaN");
    if (labels[i] == 1) {
      ++c.positives;
    } else if (labels[i] == 0) {
      ++c.negatives;
    } else {
      throw Error("labels must be 0 or 1");
    }
  }
  return c;
}

ClassCounts require_both_classes(const ScoreVector& scores, const LabelVector& labels) {
  const auto c = count_classes(scores, labels);
  if (c.positives == 0 || c.negatives == 0) throw Error("undefined AUC: need both classes");
  return c;
}

// Groups of equal scores in descending score order with per-group class counts.
struct ScoreGroup {
  double score;
  std::int64_t positives;
  std::int64_t negatives;
};

std::vector<ScoreGroup> descending_groups(const ScoreVector& scores, const LabelVector& labels) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return scores[a] > scores[b]; });
  std::vector<ScoreGroup> groups;
  for (auto i : order) {
    if (groups.empty() || groups.back().score != scores[i]) groups.push_back({scores[i], 0, 0});
    (labels[i] == 1 ? groups.back().positives : groups.back().negatives) += 1;
  }
  return groups;
}

double safe_ratio(std::int64_t num, std::int64_t den, bool& degenerate) {
  if (den == 0) {
    degenerate = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double auc(const ScoreVector& scores, const LabelVector& labels) {
  const auto c = require_both_classes(scores, labels);
  const auto groups = descending_groups(scores, labels);
  // Walk from the lowest score up, counting negatives strictly below.
  double wins = 0.0;
  std::int64_t negatives_below = 0;
  for (auto it = groups.rbegin(); it != groups.rend(); ++it) {
    wins += static_cast<double>(it->positives) * static_cast<double>(negatives_below) +
            0.5 * static_cast<double>(it->positives) * static_cast<double>(it->negatives);
    negatives_below += it->negatives;
  }
  return wins / (static_cast<double>(c.positives) * static_cast<double>(c.negatives));
}

std::vector<RocPoint> roc_curve(const ScoreVector& scores, const LabelVector& labels) {
  const auto c = require_both_classes(scores, labels);
  std::vector<RocPoint> roc;
  roc.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::int64_t tp = 0, fp = 0;
  for (const auto& g : descending_groups(scores, labels)) {
    tp += g.positives;
    fp += g.negatives;
    roc.push_back({static_cast<double>(fp) / static_cast<double>(c.negatives),
                   static_cast<double>(tp) / static_cast<double>(c.positives), g.score});
  }
  return roc;
}

double trapezoid_area(const std::vector<RocPoint>& roc) {
  double area = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i) {
    area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) / 2.0;
  }
  return area;
}

double f1_score(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

Confusion confusion_metrics(const ScoreVector& scores, const LabelVector& labels, double threshold) {
  count_classes(scores, labels);
  Confusion c;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++c.tp;
    else if (predicted) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  c.precision = safe_ratio(c.tp, c.tp + c.fp, c.degenerate);
  c.recall = safe_ratio(c.tp, c.tp + c.fn, c.degenerate);
  if (c.precision + c.recall == 0.0) c.degenerate = true;
  c.f1 = f1_score(c.precision, c.recall);
  return c;
}

ThresholdPolicy parse_threshold_policy(std::string_view s) {
  s = text::trim(s);
  if (s == "max_f1") return MaxF1{};
  const auto colon = s.find(':');
  if (colon != std::string_view::npos) {
    const auto kind = s.substr(0, colon);
    const auto value = text::parse_double(s.substr(colon + 1));
    if (value && kind == "recall_at_least") return RecallAtLeast{*value};
    if (value && kind == "fixed") return FixedThreshold{*value};
  }
  throw Error("unknown threshold policy '" + std::string(s) +
              "' (expected max_f1, recall_at_least:<r> or fixed:<t>)");
}

std::string format_threshold_policy(const ThresholdPolicy& p) {
  if (std::holds_alternative<MaxF1>(p)) return "max_f1";
  if (const auto* r = std::get_if<RecallAtLeast>(&p)) return "recall_at_least:" + text::format_double(r->target);
  return "fixed:" + text::format_double(std::get<FixedThreshold>(p).value);
}

double select_threshold(const ScoreVector& scores, const LabelVector& labels,
                        const ThresholdPolicy& policy) {
  if (const auto* fixed = std::get_if<FixedThreshold>(&policy)) return fixed->value;
  const auto c = require_both_classes(scores, labels);
  const auto groups = descending_groups(scores, labels);

  const auto midpoint_below = [&](std::size_t g) {
    if (g + 1 >= groups.size()) return groups[g].score;
    const double hi = groups[g].score, lo = groups[g + 1].score;
    const double mid = lo + (hi - lo) / 2.0;
    return mid > lo && mid <= hi ? mid : hi;
  };

  std::int64_t tp = 0, fp = 0;
  if (const auto* target = std::get_if<RecallAtLeast>(&policy)) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      tp += groups[g].positives;
      fp += groups[g].negatives;
      const double recall = static_cast<double>(tp) / static_cast<double>(c.positives);
      if (recall >= target->target) return midpoint_below(g);
    }
    throw Error("infeasible recall target " + text::format_double(target->target));
  }

  // max_f1: scan thresholds high to low; >= keeps the lower threshold on ties.
  double best_f1 = -1.0;
  std::size_t best = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    tp += groups[g].positives;
    fp += groups[g].negatives;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(c.positives);
    const double f1 = f1_score(precision, recall);
    if (f1 >= best_f1) {
      best_f1 = f1;
      best = g;
    }
  }
  return midpoint_below(best);
}

FoldMetrics evaluate_scores(const ScoreVector& scores, const LabelVector& labels,
                            const ThresholdPolicy& policy) {
  FoldMetrics m;
  m.units = static_cast<std::size_t>(scores.size());
  m.auc = auc(scores, labels);
  m.threshold = select_threshold(scores, labels, policy);
  m.confusion = confusion_metrics(scores, labels, m.threshold);
  m.precision = m.confusion.precision;
  m.recall = m.confusion.recall;
  m.f1 = m.confusion.f1;
  return m;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

json threshold_json(double t) { return std::isfinite(t) ? json(t) : json(nullptr); }

double threshold_from(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

json to_json(const FoldMetrics& m) {
  return json{{"fold", m.fold},
              {"units", m.units},
              {"auc", m.auc},
              {"precision", m.precision},
              {"recall", m.recall},
              {"f1", m.f1},
              {"threshold", threshold_json(m.threshold)},
              {"confusion",
               {{"tp", m.confusion.tp}, {"fp", m.confusion.fp}, {"tn", m.confusion.tn}, {"fn", m.confusion.fn}}},
              {"degenerate", m.confusion.degenerate},
              {"train_time_s", m.train_time_s}};
}

FoldMetrics fold_from(const json& j) {
  FoldMetrics m;
  m.fold = j.at("fold").get<int>();
  m.units = j.at("units").get<std::size_t>();
  m.auc = j.at("auc").get<double>();
  m.precision = j.at("precision").get<double>();
  m.recall = j.at("recall").get<double>();
  m.f1 = j.at("f1").get<double>();
  m.threshold = threshold_from(j.at("threshold"));
  const auto& c = j.at("confusion");
  m.confusion.tp = c.at("tp").get<std::int64_t>();
  m.confusion.fp = c.at("fp").get<std::int64_t>();
  m.confusion.tn = c.at("tn").get<std::int64_t>();
  m.confusion.fn = c.at("fn").get<std::int64_t>();
  m.confusion.precision = m.precision;
  m.confusion.recall = m.recall;
  m.confusion.f1 = m.f1;
  m.confusion.degenerate = j.value("degenerate", false);
  m.train_time_s = j.at("train_time_s").get<double>();
  return m;
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  json folds = json::array();
  for (const auto& f : report.folds) folds.push_back(to_json(f));
  json roc = json::array();
  for (const auto& p : report.roc_points) {
    roc.push_back({{"fpr", p.fpr}, {"tpr", p.tpr}, {"threshold", threshold_json(p.threshold)}});
  }
  const json j{{"model", report.model},
               {"threshold_policy", report.threshold_policy},
               {"folds", folds},
               {"mean", to_json(report.mean)},
               {"pooled", to_json(report.pooled)},
               {"roc_points", roc}};
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    EvalReport r;
    r.model = j.at("model").get<std::string>();
    r.threshold_policy = j.value("threshold_policy", "");
    for (const auto& f : j.at("folds")) r.folds.push_back(fold_from(f));
    r.mean = fold_from(j.at("mean"));
    r.pooled = fold_from(j.at("pooled"));
    for (const auto& p : j.at("roc_points")) {
      r.roc_points.push_back({p.at("fpr").get<double>(), p.at("tpr").get<double>(), threshold_from(p.at("threshold"))});
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(std::string("report JSON: ") + e.what());
  }
}

void write_roc_csv(std::ostream& out, const std::vector<RocPoint>& roc) {
  out << "threshold,fpr,tpr\n";
  for (const auto& p : roc) {
    out << text::format_double(p.threshold) << ',' << text::format_double(p.fpr) << ','
        << text::format_double(p.tpr) << '\n';
  }
}

std::string render_report_table(const std::vector<EvalReport>& reports) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-24s %8s %10s %8s %10s %9s\n", "Model", "AUC", "Precision",
                "Recall", "F-1 Score", "Time(s)");
  out += line;
  out += std::string(74, '-') + "\n";
  for (const auto& r : reports) {
    const auto& p = r.pooled;
    std::snprintf(line, sizeof(line), "%-24s %8.3f %10.3f %8.3f %10.3f %9.3f\n", r.model.c_str(), p.auc,
                  p.precision, p.recall, p.f1, r.mean.train_time_s);
    out += line;
  }
  return out;
}

}  // namespace sepsis
