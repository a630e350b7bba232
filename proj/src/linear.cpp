#include "sepsis/trees.hpp"

#include <cmath>

namespace sepsis {

namespace {

Eigen::MatrixXd standardize(const Eigen::MatrixXd& x, const Eigen::VectorXd& center,
                            const Eigen::VectorXd& scale) {
  Eigen::MatrixXd z(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const double v = x(r, c);
      z(r, c) = is_missing(v) ? 0.0 : (v - center[c]) / scale[c];
    }
  }
  return z;
}

// Largest eigenvalue of z^T z / n by power iteration; bounds the loss curvature.
double top_eigenvalue(const Eigen::MatrixXd& z) {
  const double n = static_cast<double>(z.rows());
  Eigen::VectorXd v = Eigen::VectorXd::Ones(z.cols()).normalized();
  double lambda = 0.0;
  for (int it = 0; it < 50; ++it) {
    Eigen::VectorXd w = z.transpose() * (z * v) / n;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    lambda = norm;
    v = w / norm;
  }
  return lambda;
}

}  // namespace

Eigen::VectorXd LinearModel::predict_margin(const FeatureMatrix& m) const {
  if (m.columns != feature_names) throw Error("feature columns do not match the linear model");
  return (standardize(m.values, center, scale) * weights).array() + bias;
}

Eigen::VectorXd LinearModel::predict_proba(const FeatureMatrix& m) const {
  return predict_margin(m).unaryExpr([](double v) { return sigmoid(v); });
}

LinearModel train_logistic_baseline(const FeatureMatrix& matrix, const LogisticParams& params) {
  const auto n = matrix.rows();
  const auto positives = (matrix.labels.array() == 1).count();
  if (positives == 0 || positives == n) throw Error("degenerate labels");
  if (!(params.l2 >= 0.0) || params.epochs < 0 || !(params.step > 0.0)) {
    throw Error("invalid logistic params");
  }

  LinearModel model;
  model.feature_names = matrix.columns;
  const auto d = matrix.cols();
  model.center = Eigen::VectorXd::Zero(d);
  model.scale = Eigen::VectorXd::Ones(d);
  for (Eigen::Index c = 0; c < d; ++c) {
    double sum = 0.0, count = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (!is_missing(matrix.values(r, c))) {
        sum += matrix.values(r, c);
        count += 1.0;
      }
    }
    if (count == 0.0) continue;
    const double mean = sum / count;
    double ss = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (!is_missing(matrix.values(r, c))) ss += (matrix.values(r, c) - mean) * (matrix.values(r, c) - mean);
    }
    const double sd = std::sqrt(ss / count);
    model.center[c] = mean;
    model.scale[c] = sd > 0.0 ? sd : 1.0;
  }

  const Eigen::MatrixXd z = standardize(matrix.values, model.center, model.scale);
  const Eigen::VectorXd y = matrix.labels.cast<double>();
  const double prior = static_cast<double>(positives) / static_cast<double>(n);
  model.bias = std::log(prior / (1.0 - prior));
  model.weights = Eigen::VectorXd::Zero(d);

  // Step relative to the curvature bound 0.25 * lambda_max + l2.
  const double curvature = 0.25 * top_eigenvalue(z) + params.l2;
  const double step = curvature > 0.0 ? params.step / curvature : params.step;
  const double bias_step = params.step / 0.25;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int e = 0; e < params.epochs; ++e) {
    const Eigen::VectorXd margin = (z * model.weights).array() + model.bias;
    const Eigen::VectorXd residual = margin.unaryExpr([](double v) { return sigmoid(v); }) - y;
    const Eigen::VectorXd grad = z.transpose() * residual * inv_n + params.l2 * model.weights;
    model.weights -= step * grad;
    model.bias -= bias_step * residual.mean();
  }
  return model;
}

}  // namespace sepsis
