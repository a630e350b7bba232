#pragma once

#include "sepsis/core.hpp"
#include "sepsis/features.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace sepsis {

class WorkerPool;

// ---------------------------------------------------------------------------
// Binning
// ---------------------------------------------------------------------------

inline constexpr std::uint16_t kMissingBin = 0xFFFF;

/// Per-feature quantized view of a matrix. Bin b of feature f holds values in
/// (edges[f][b-1], edges[f][b]]; the last edge is +inf.
struct BinnedMatrix {
  std::vector<std::vector<double>> upper_edges;
  Eigen::Matrix<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic> bins;  // rows x features

  Eigen::Index rows() const { return bins.rows(); }
  Eigen::Index features() const { return bins.cols(); }
  int num_bins(Eigen::Index feature) const {
    return static_cast<int>(upper_edges[static_cast<std::size_t>(feature)].size());
  }
};

/// Upper edges at empirical quantiles of the non-missing values. Columns with at
/// most `max_bins` distinct values get one bin per value. Edges sit halfway
/// between neighbouring distinct values.
std::vector<double> quantile_bin_edges(std::span<const double> values, int max_bins);

std::uint16_t bin_index(const std::vector<double>& edges, double value);

BinnedMatrix quantile_bin(const Eigen::MatrixXd& values, int max_bins);
inline BinnedMatrix quantile_bin(const FeatureMatrix& m, int max_bins) {
  return quantile_bin(m.values, max_bins);
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

inline constexpr double kHessianFloor = 1e-16;

struct GradHess {
  double g = 0.0;
  double h = 0.0;
};

double sigmoid(double margin);

/// First and second derivative of the weighted logistic loss in the margin.
GradHess logistic_grad_hess(int label, double margin, double pos_weight);

/// w * [-y log p - (1 - y) log(1 - p)], p = sigmoid(margin).
double weighted_logloss(int label, double margin, double pos_weight);

// ---------------------------------------------------------------------------
// Histograms and split finding
// ---------------------------------------------------------------------------

struct HistBin {
  double g = 0.0;
  double h = 0.0;
  std::int64_t count = 0;

  HistBin& operator+=(const HistBin& o) {
    g += o.g;
    h += o.h;
    count += o.count;
    return *this;
  }
  HistBin& operator-=(const HistBin& o) {
    g -= o.g;
    h -= o.h;
    count -= o.count;
    return *this;
  }
  friend HistBin operator+(HistBin a, const HistBin& b) { return a += b; }
  friend HistBin operator-(HistBin a, const HistBin& b) { return a -= b; }
};

struct FeatureHistogram {
  std::vector<HistBin> bins;
  HistBin missing;

  HistBin total() const;
};

using NodeHistogram = std::vector<FeatureHistogram>;

enum class DefaultDirection : std::uint8_t { left, right };

struct SplitConstraints {
  double lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1e-3;
  std::int64_t min_samples_leaf = 20;
};

struct SplitCandidate {
  int feature = -1;
  int bin = -1;  // rows with bin <= this go left
  DefaultDirection default_direction = DefaultDirection::left;
  double gain = 0.0;
  HistBin left;
  HistBin right;
};

/// Regularized second-order gain of splitting `total` into `left` and the rest.
double split_gain(const HistBin& left, const HistBin& right, double lambda, double gamma);

double leaf_weight(double g, double h, double lambda);

/// Best split over the listed features (all when empty), bin boundaries and
/// missing direction. Ties go to the lower feature, then lower bin, then left.
std::optional<SplitCandidate> best_split(const NodeHistogram& hist,
                                         const SplitConstraints& constraints,
                                         std::span<const int> features = {});

// ---------------------------------------------------------------------------
// Trees and ensembles
// ---------------------------------------------------------------------------

enum class Growth : std::uint8_t { depthwise, leafwise };

std::string_view growth_name(Growth g);
std::optional<Growth> parse_growth(std::string_view s);

struct BoostParams {
  Growth growth = Growth::leafwise;
  int num_trees = 100;
  double learning_rate = 0.1;
  int max_depth = 6;    // depthwise
  int max_leaves = 31;  // leafwise
  double lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1e-3;
  int min_samples_leaf = 20;
  int max_bins = 255;
  double pos_weight = 1.0;
  double subsample = 1.0;
  double colsample = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  SplitConstraints constraints() const {
    return {lambda, gamma, min_child_weight, min_samples_leaf};
  }
  friend bool operator==(const BoostParams&, const BoostParams&) = default;
};

struct TreeNode {
  bool is_leaf = true;
  int feature = -1;
  double threshold = 0.0;  // go left when value <= threshold
  DefaultDirection default_direction = DefaultDirection::left;
  int left = -1;
  int right = -1;
  double weight = 0.0;  // leaf output before shrinkage
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // root at 0

  template <typename Derived>
  double predict(const Eigen::DenseBase<Derived>& row) const {
    int id = 0;
    while (!nodes[static_cast<std::size_t>(id)].is_leaf) {
      const auto& n = nodes[static_cast<std::size_t>(id)];
      const double v = row.derived().coeff(n.feature);
      if (is_missing(v)) {
        id = n.default_direction == DefaultDirection::left ? n.left : n.right;
      } else {
        id = v <= n.threshold ? n.left : n.right;
      }
    }
    return nodes[static_cast<std::size_t>(id)].weight;
  }

  int leaf_count() const;
  int depth() const;
};

/// Grows one tree on (g, h). `rows` and `features` restrict the sample
/// (all when empty); both must be ascending.
RegressionTree grow_tree(const BinnedMatrix& binned, std::span<const double> g,
                         std::span<const double> h, const BoostParams& params,
                         std::span<const int> rows = {}, std::span<const int> features = {},
                         WorkerPool* pool = nullptr);

struct BoostedModel {
  double base_score = 0.0;
  std::vector<RegressionTree> trees;
  std::vector<std::string> feature_names;
  BoostParams params;

  /// Margins for a matrix whose columns are exactly the model's features (any order).
  Eigen::VectorXd predict_margin(const FeatureMatrix& m) const;
  Eigen::VectorXd predict_proba(const FeatureMatrix& m) const;
  /// Margin of one row already in model column order.
  template <typename Derived>
  double margin(const Eigen::DenseBase<Derived>& row) const {
    double m = base_score;
    for (const auto& t : trees) m += params.learning_rate * t.predict(row);
    return m;
  }
};

struct TrainTrace {
  std::vector<double> train_loss;  // weighted logloss after each round (index 0: base score)
};

/// Fits a boosted ensemble to the matrix labels. Throws "degenerate labels" on
/// single-class input.
BoostedModel train(const FeatureMatrix& matrix, const BoostParams& params, int workers = 1,
                   TrainTrace* trace = nullptr);

Eigen::VectorXd predict_proba(const BoostedModel& model, const FeatureMatrix& m);

void save_model(std::ostream& out, const BoostedModel& model);
BoostedModel load_model(std::istream& in);

// ---------------------------------------------------------------------------
// Linear baseline
// ---------------------------------------------------------------------------

struct LogisticParams {
  double l2 = 1e-3;
  int epochs = 300;
  double step = 0.5;
};

struct LinearModel {
  std::vector<std::string> feature_names;
  Eigen::VectorXd center;  // column means, used for missing values too
  Eigen::VectorXd scale;
  Eigen::VectorXd weights;
  double bias = 0.0;

  Eigen::VectorXd predict_margin(const FeatureMatrix& m) const;
  Eigen::VectorXd predict_proba(const FeatureMatrix& m) const;
};

/// Full-batch gradient descent on L2-regularized logistic loss over
/// standardized columns; missing cells take the column mean.
LinearModel train_logistic_baseline(const FeatureMatrix& matrix, const LogisticParams& params = {});

}  // namespace sepsis
