#include "sepsis/cv.hpp"

#include "sepsis/random.hpp"
#include "sepsis/text.hpp"

#include <algorithm>
#include <chrono>

namespace sepsis {

int FoldAssignment::fold(const std::string& patient_id) const {
  const auto it = fold_of.find(patient_id);
  if (it == fold_of.end()) throw Error("patient '" + patient_id + "' has no fold");
  return it->second;
}

std::vector<int> FoldAssignment::row_folds(const std::vector<std::string>& patient_ids) const {
  std::vector<int> out;
  out.reserve(patient_ids.size());
  for (const auto& p : patient_ids) out.push_back(fold(p));
  return out;
}

namespace {

struct PatientKey {
  std::string id;
  std::int64_t positives = 0;
  std::int64_t units = 0;
};

struct FoldLoad {
  std::int64_t positives = 0;
  std::int64_t units = 0;
};

// N * |positives - units * P / N|: the fold's positive excess over the global rate.
__int128 excess(const FoldLoad& f, std::int64_t pos, std::int64_t total) {
  const __int128 d = static_cast<__int128>(f.positives) * total - static_cast<__int128>(pos) * f.units;
  return d < 0 ? -d : d;
}

}  // namespace

FoldAssignment stratified_group_kfold(const std::vector<std::string>& patient_ids,
                                      const Eigen::VectorXi& labels, int k, std::uint64_t seed) {
  if (static_cast<Eigen::Index>(patient_ids.size()) != labels.size()) {
    throw Error("patient ids and labels differ in length");
  }
  if (k < 2) throw Error("k must be at least 2");

  std::map<std::string, PatientKey> by_id;
  for (std::size_t i = 0; i < patient_ids.size(); ++i) {
    auto& p = by_id[patient_ids[i]];
    p.id = patient_ids[i];
    ++p.units;
    if (labels[static_cast<Eigen::Index>(i)] == 1) ++p.positives;
  }
  if (static_cast<int>(by_id.size()) < k) {
    throw Error("fewer patients (" + std::to_string(by_id.size()) + ") than folds (" + std::to_string(k) + ")");
  }

  std::vector<PatientKey> order;
  order.reserve(by_id.size());
  for (auto& [id, p] : by_id) order.push_back(std::move(p));
  const auto key_less = [](const PatientKey& a, const PatientKey& b) {
    if (a.positives != b.positives) return a.positives > b.positives;
    return a.units > b.units;
  };
  std::stable_sort(order.begin(), order.end(), key_less);
  Rng rng(derive_seed(seed, 0x666F6C64));
  for (std::size_t lo = 0; lo < order.size();) {
    std::size_t hi = lo + 1;
    while (hi < order.size() && !key_less(order[lo], order[hi])) ++hi;
    std::vector<PatientKey> group(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                  order.begin() + static_cast<std::ptrdiff_t>(hi));
    rng.shuffle(group);
    std::move(group.begin(), group.end(), order.begin() + static_cast<std::ptrdiff_t>(lo));
    lo = hi;
  }

  const std::int64_t total = labels.size();
  const std::int64_t pos = (labels.array() == 1).count();
  std::vector<FoldLoad> loads(static_cast<std::size_t>(k));
  int empty = k;
  FoldAssignment out;
  out.k = k;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& p = order[i];
    const auto remaining = static_cast<int>(order.size() - i);
    const bool only_empty = remaining <= empty;
    int best = -1;
    __int128 best_delta = 0;
    for (int f = 0; f < k; ++f) {
      const auto& load = loads[static_cast<std::size_t>(f)];
      if (only_empty && load.units > 0) continue;
      const FoldLoad after{load.positives + p.positives, load.units + p.units};
      const __int128 delta = excess(after, pos, total) - excess(load, pos, total);
      if (best < 0 || delta < best_delta ||
          (delta == best_delta && load.units < loads[static_cast<std::size_t>(best)].units)) {
        best = f;
        best_delta = delta;
      }
    }
    if (loads[static_cast<std::size_t>(best)].units == 0) --empty;
    loads[static_cast<std::size_t>(best)].positives += p.positives;
    loads[static_cast<std::size_t>(best)].units += p.units;
    out.fold_of[p.id] = best;
  }
  return out;
}

CvResult cross_validate(const FeatureMatrix& matrix, const FoldAssignment& folds, const std::string& model,
                        const FitPredict& fit_predict, const ThresholdPolicy& policy) {
  const auto row_fold = folds.row_folds(matrix.patient_ids);
  CvResult result;
  result.oof_scores = Eigen::VectorXd::Constant(matrix.rows(), kMissing);
  result.oof_fold = row_fold;
  auto& report = result.report;
  report.model = model;
  report.threshold_policy = format_threshold_policy(policy);

  for (int f = 0; f < folds.k; ++f) {
    std::vector<Eigen::Index> train_rows, valid_rows;
    for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
      (row_fold[static_cast<std::size_t>(r)] == f ? valid_rows : train_rows).push_back(r);
    }
    const auto name = "fold " + std::to_string(f);
    if (valid_rows.empty()) throw Error(name + ": no validation units");
    const auto train = matrix.select_rows(train_rows);
    const auto valid = matrix.select_rows(valid_rows);
    const auto train_pos = (train.labels.array() == 1).count();
    if (train_pos == 0 || train_pos == train.rows()) throw Error(name + ": training data has a single class");
    const auto valid_pos = (valid.labels.array() == 1).count();
    if (valid_pos == 0 || valid_pos == valid.rows()) throw Error(name + ": validation data has a single class");

    const auto t0 = std::chrono::steady_clock::now();
    const Eigen::VectorXd scores = fit_predict(train, valid);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - t0;
    if (scores.size() != valid.rows()) throw Error(name + ": wrong number of predictions");

    for (std::size_t i = 0; i < valid_rows.size(); ++i) {
      result.oof_scores[valid_rows[i]] = scores[static_cast<Eigen::Index>(i)];
    }
    auto m = evaluate_scores(scores, valid.labels, policy);
    m.fold = f;
    m.train_time_s = elapsed.count();
    report.folds.push_back(m);
  }

  auto& mean = report.mean;
  const double n = static_cast<double>(report.folds.size());
  for (const auto& m : report.folds) {
    mean.units += m.units;
    mean.auc += m.auc / n;
    mean.precision += m.precision / n;
    mean.recall += m.recall / n;
    mean.f1 += m.f1 / n;
    mean.threshold += m.threshold / n;
    mean.train_time_s += m.train_time_s / n;
    mean.confusion.tp += m.confusion.tp;
    mean.confusion.fp += m.confusion.fp;
    mean.confusion.tn += m.confusion.tn;
    mean.confusion.fn += m.confusion.fn;
    mean.confusion.degenerate = mean.confusion.degenerate || m.confusion.degenerate;
  }
  mean.confusion.precision = mean.precision;
  mean.confusion.recall = mean.recall;
  mean.confusion.f1 = mean.f1;

  report.pooled = evaluate_scores(result.oof_scores, matrix.labels, policy);
  for (const auto& m : report.folds) report.pooled.train_time_s += m.train_time_s;
  report.roc_points = roc_curve(result.oof_scores, matrix.labels);
  return result;
}

CvResult run_cv(const FeatureMatrix& matrix, const BoostParams& params, const FoldAssignment& folds,
                int workers, const ThresholdPolicy& policy) {
  params.validate();
  const auto model = std::string("gbdt-") + std::string(growth_name(params.growth));
  return cross_validate(
      matrix, folds, model,
      [&](const FeatureMatrix& train_set, const FeatureMatrix& valid) {
        return predict_proba(train(train_set, params, workers), valid);
      },
      policy);
}

CvResult run_cv(const FeatureMatrix& matrix, const BoostParams& params, int k, std::uint64_t seed,
                int workers, const ThresholdPolicy& policy) {
  return run_cv(matrix, params, stratified_group_kfold(matrix, k, seed), workers, policy);
}

CvResult run_cv_logistic(const FeatureMatrix& matrix, const LogisticParams& params, const FoldAssignment& folds,
                         const ThresholdPolicy& policy) {
  return cross_validate(
      matrix, folds, "logistic",
      [&](const FeatureMatrix& train_set, const FeatureMatrix& valid) {
        return train_logistic_baseline(train_set, params).predict_proba(valid);
      },
      policy);
}

void write_oof_csv(std::ostream& out, const FeatureMatrix& matrix, const CvResult& result) {
  out << "unit_id,patient_id,fold,label,score\n";
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    const auto i = static_cast<std::size_t>(r);
    out << text::csv_escape(matrix.unit_ids[i]) << ',' << text::csv_escape(matrix.patient_ids[i]) << ','
        << result.oof_fold[i] << ',' << matrix.labels[r] << ',' << text::format_double(result.oof_scores[r])
        << '\n';
  }
}

}  // namespace sepsis
