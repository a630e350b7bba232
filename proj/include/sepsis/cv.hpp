#pragma once

#include "sepsis/features.hpp"
#include "sepsis/metrics.hpp"
#include "sepsis/trees.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace sepsis {

struct FoldAssignment {
  int k = 0;
  std::map<std::string, int> fold_of;  // patient_id -> fold

  int fold(const std::string& patient_id) const;
  /// Fold index of every row, in row order.
  std::vector<int> row_folds(const std::vector<std::string>& patient_ids) const;
};

/// Greedy grouped stratification. Patients are taken in order of (positive
/// units desc, units desc) and each goes to the fold whose size-weighted
/// deviation from the global positive rate grows least, then the smaller fold,
/// then the lower index. `seed` only permutes patients with equal keys.
FoldAssignment stratified_group_kfold(const std::vector<std::string>& patient_ids,
                                      const Eigen::VectorXi& labels, int k, std::uint64_t seed);

inline FoldAssignment stratified_group_kfold(const FeatureMatrix& m, int k, std::uint64_t seed) {
  return stratified_group_kfold(m.patient_ids, m.labels, k, seed);
}

/// Trains on the first matrix and returns scores for the rows of the second.
using FitPredict = std::function<Eigen::VectorXd(const FeatureMatrix& train, const FeatureMatrix& valid)>;

struct CvResult {
  EvalReport report;
  Eigen::VectorXd oof_scores;  // one per matrix row
  std::vector<int> oof_fold;
};

/// Runs every fold in index order. Per-fold thresholds come from that fold's
/// held-out scores; the pooled row uses all out-of-fold scores at once.
CvResult cross_validate(const FeatureMatrix& matrix, const FoldAssignment& folds, const std::string& model,
                        const FitPredict& fit_predict, const ThresholdPolicy& policy = RecallAtLeast{});

CvResult run_cv(const FeatureMatrix& matrix, const BoostParams& params, const FoldAssignment& folds,
                int workers = 1, const ThresholdPolicy& policy = RecallAtLeast{});
CvResult run_cv(const FeatureMatrix& matrix, const BoostParams& params, int k, std::uint64_t seed,
                int workers = 1, const ThresholdPolicy& policy = RecallAtLeast{});

CvResult run_cv_logistic(const FeatureMatrix& matrix, const LogisticParams& params, const FoldAssignment& folds,
                         const ThresholdPolicy& policy = RecallAtLeast{});

/// `unit_id,patient_id,fold,label,score`
void write_oof_csv(std::ostream& out, const FeatureMatrix& matrix, const CvResult& result);

}  // namespace sepsis
