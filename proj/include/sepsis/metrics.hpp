#pragma once

#include "sepsis/core.hpp"

#include <Eigen/Core>

#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace sepsis {

using ScoreVector = Eigen::Ref<const Eigen::VectorXd>;
using LabelVector = Eigen::Ref<const Eigen::VectorXi>;

/// Mann-Whitney: P(score_pos > score_neg) + 0.5 P(tie). Throws "undefined AUC"
/// unless both classes are present.
double auc(const ScoreVector& scores, const LabelVector& labels);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // +inf for the (0, 0) anchor
};

/// One point per distinct score, thresholds descending, from (0,0) to (1,1).
std::vector<RocPoint> roc_curve(const ScoreVector& scores, const LabelVector& labels);

/// Trapezoidal area under an ROC polyline.
double trapezoid_area(const std::vector<RocPoint>& roc);

struct Confusion {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool degenerate = false;  // some ratio was 0/0 and reported as 0
};

/// Predicted positive iff score >= threshold.
Confusion confusion_metrics(const ScoreVector& scores, const LabelVector& labels, double threshold);

/// Harmonic mean; 0 when both are 0.
double f1_score(double precision, double recall);

struct MaxF1 {};
struct RecallAtLeast {
  double target = 0.80;
};
struct FixedThreshold {
  double value = 0.5;
};
using ThresholdPolicy = std::variant<MaxF1, RecallAtLeast, FixedThreshold>;

/// "max_f1", "recall_at_least:0.8" or "fixed:0.5".
ThresholdPolicy parse_threshold_policy(std::string_view s);
std::string format_threshold_policy(const ThresholdPolicy& p);

/// Thresholds are reported as the midpoint between the chosen score and the
/// next lower distinct score (any value in that gap yields the same counts).
double select_threshold(const ScoreVector& scores, const LabelVector& labels,
                        const ThresholdPolicy& policy = RecallAtLeast{});

struct FoldMetrics {
  int fold = -1;  // -1 for pooled / mean rows
  std::size_t units = 0;
  double auc = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double threshold = 0.0;
  Confusion confusion;
  double train_time_s = 0.0;
};

/// Per-fold and aggregate metrics of one model.
struct EvalReport {
  std::string model;
  std::string threshold_policy;
  std::vector<FoldMetrics> folds;
  FoldMetrics mean;    // fold average
  FoldMetrics pooled;  // all out-of-fold predictions at once
  std::vector<RocPoint> roc_points;  // pooled
};

/// Metrics at the threshold chosen by `policy` on these scores.
FoldMetrics evaluate_scores(const ScoreVector& scores, const LabelVector& labels,
                            const ThresholdPolicy& policy);

/// Field-for-field JSON rendering of the report.
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& json);

/// `threshold,fpr,tpr`
void write_roc_csv(std::ostream& out, const std::vector<RocPoint>& roc);

/// Fixed-width comparison table: Model, AUC, Precision, Recall, F-1 Score, Time(s).
std::string render_report_table(const std::vector<EvalReport>& reports);

}  // namespace sepsis
