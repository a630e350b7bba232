#include "sepsis/trees.hpp"

#include <algorithm>
#include <cmath>

namespace sepsis {

double sigmoid(double margin) {
  if (margin >= 0) return 1.0 / (1.0 + std::exp(-margin));
  const double e = std::exp(margin);
  return e / (1.0 + e);
}

GradHess logistic_grad_hess(int label, double margin, double pos_weight) {
  const double p = sigmoid(margin);
  const double w = label == 1 ? pos_weight : 1.0;
  return {w * (p - static_cast<double>(label)), std::max(w * p * (1.0 - p), kHessianFloor)};
}

double weighted_logloss(int label, double margin, double pos_weight) {
  // softplus(x) = log(1 + e^x), evaluated without overflow
  const auto softplus = [](double x) {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  };
  return label == 1 ? pos_weight * softplus(-margin) : softplus(margin);
}

HistBin FeatureHistogram::total() const {
  HistBin t = missing;
  for (const auto& b : bins) t += b;
  return t;
}

double split_gain(const HistBin& left, const HistBin& right, double lambda, double gamma) {
  const double g = left.g + right.g;
  const double h = left.h + right.h;
  return 0.5 * (left.g * left.g / (left.h + lambda) + right.g * right.g / (right.h + lambda) -
                g * g / (h + lambda)) -
         gamma;
}

double leaf_weight(double g, double h, double lambda) { return -g / (h + lambda); }

std::optional<SplitCandidate> best_split(const NodeHistogram& hist,
                                         const SplitConstraints& constraints,
                                         std::span<const int> features) {
  std::vector<int> all;
  if (features.empty()) {
    all.resize(hist.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    features = all;
  }
  const std::int64_t min_count = std::max<std::int64_t>(1, constraints.min_samples_leaf);

  std::optional<SplitCandidate> best;
  double best_gain = 0.0;
  for (int f : features) {
    const auto& fh = hist[static_cast<std::size_t>(f)];
    const auto nb = static_cast<int>(fh.bins.size());
    if (nb < 2) continue;
    const HistBin total = fh.total();
    const double parent = total.g * total.g / (total.h + constraints.lambda);
    const bool has_missing = fh.missing.count > 0;
    HistBin prefix;
    for (int b = 0; b + 1 < nb; ++b) {
      const auto& bin = fh.bins[static_cast<std::size_t>(b)];
      if (bin.count == 0 && b > 0) continue;
      prefix += bin;
      if (total.count - prefix.count < min_count) break;
      for (auto dir : {DefaultDirection::left, DefaultDirection::right}) {
        if (dir == DefaultDirection::right && !has_missing) break;
        const HistBin left = dir == DefaultDirection::left ? prefix + fh.missing : prefix;
        const HistBin right = total - left;
        if (left.count < min_count || right.count < min_count) continue;
        if (left.h < constraints.min_child_weight || right.h < constraints.min_child_weight) continue;
        const double gain = 0.5 * (left.g * left.g / (left.h + constraints.lambda) +
                                   right.g * right.g / (right.h + constraints.lambda) - parent) -
                            constraints.gamma;
        if (gain > best_gain) {
          best_gain = gain;
          best = SplitCandidate{f, b, dir, gain, left, right};
        }
      }
    }
  }
  return best;
}

std::string_view growth_name(Growth g) { return g == Growth::leafwise ? "leafwise" : "depthwise"; }

std::optional<Growth> parse_growth(std::string_view s) {
  if (s == "leafwise" || s == "leaf-wise") return Growth::leafwise;
  if (s == "depthwise" || s == "depth-wise") return Growth::depthwise;
  return std::nullopt;
}

void BoostParams::validate() const {
  const auto fail = [](const std::string& what) { throw Error("invalid boost params: " + what); };
  if (num_trees < 0) fail("num_trees must be >= 0");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (max_depth < 0) fail("max_depth must be >= 0");
  if (max_leaves < 1) fail("max_leaves must be >= 1");
  if (!(lambda >= 0.0)) fail("lambda must be >= 0");
  if (!(gamma >= 0.0)) fail("gamma must be >= 0");
  if (!(min_child_weight >= 0.0)) fail("min_child_weight must be >= 0");
  if (min_samples_leaf < 0) fail("min_samples_leaf must be >= 0");
  if (max_bins < 2 || max_bins > 65535) fail("max_bins must be in [2, 65535]");
  if (!(pos_weight >= 0.0)) fail("pos_weight must be >= 0");
  if (!(subsample > 0.0 && subsample <= 1.0)) fail("subsample must be in (0, 1]");
  if (!(colsample > 0.0 && colsample <= 1.0)) fail("colsample must be in (0, 1]");
}

}  // namespace sepsis
