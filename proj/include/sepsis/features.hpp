#pragma once

#include "sepsis/core.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

namespace sepsis {

// ---------------------------------------------------------------------------
// Window kernels. Templated on the Eigen expression so they accept columns,
// segments and arrays of any real scalar without copies.
// ---------------------------------------------------------------------------

enum class Stat : std::uint8_t { mean, std, max, min, kurtosis, median, skewness };

inline constexpr std::array<Stat, 7> kAllStats = {Stat::mean,     Stat::std,    Stat::max,
                                                  Stat::min,      Stat::kurtosis, Stat::median,
                                                  Stat::skewness};

std::string_view stat_name(Stat s);
std::optional<Stat> parse_stat(std::string_view s);

template <typename Scalar>
struct WindowStats {
  Scalar mean;
  Scalar std;  // population (1/n)
  Scalar max;
  Scalar min;
  Scalar kurtosis;  // excess, m4/m2^2 - 3; sentinel when m2 = 0
  Scalar median;
  Scalar skewness;  // m3/m2^(3/2); sentinel when m2 = 0

  Scalar operator[](Stat s) const {
    switch (s) {
      case Stat::mean: return mean;
      case Stat::std: return std;
      case Stat::max: return max;
      case Stat::min: return min;
      case Stat::kurtosis: return kurtosis;
      case Stat::median: return median;
      case Stat::skewness: return skewness;
    }
    return mean;
  }
};

template <typename Derived>
typename Derived::Scalar median(const Eigen::DenseBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  std::vector<Scalar> v(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) v[static_cast<std::size_t>(i)] = x.derived().coeff(i);
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  if (v.size() % 2 == 1) return v[mid];
  const Scalar upper = v[mid];
  const Scalar lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return lower + (upper - lower) / Scalar(2);
}

/// Central-moment summary of a non-empty vector. Two passes: mean first, then
/// moments of the centered values.
template <typename Derived>
WindowStats<typename Derived::Scalar> window_statistics(const Eigen::DenseBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const auto a = x.derived().array();
  WindowStats<Scalar> s{};
  s.mean = a.mean();
  s.max = a.maxCoeff();
  s.min = a.minCoeff();
  s.median = median(x);
  if (s.max == s.min) {
    s.std = Scalar(0);
    s.skewness = s.kurtosis = std::numeric_limits<Scalar>::quiet_NaN();
    return s;
  }
  const auto centered = (a - s.mean).eval();
  const auto sq = centered.square().eval();
  const Scalar m2 = sq.mean();
  const Scalar m3 = (sq * centered).mean();
  const Scalar m4 = sq.square().mean();
  s.std = std::sqrt(m2);
  s.skewness = m3 / (m2 * s.std);
  s.kurtosis = m4 / (m2 * m2) - Scalar(3);
  return s;
}

/// |X_k| / n with X_k = sum_t x_t exp(-2 pi i k t / n).
template <typename Derived>
typename Derived::Scalar dft_magnitude(const Eigen::DenseBase<Derived>& x, int k) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = x.size();
  const auto a = x.derived().array();
  if (a.maxCoeff() == a.minCoeff()) return Scalar(0);
  const Scalar offset = a.mean();
  Scalar re = 0, im = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto phase = static_cast<Scalar>((static_cast<long long>(k) * t) % n);
    const Scalar angle = Scalar(2) * std::numbers::pi_v<Scalar> * phase / static_cast<Scalar>(n);
    const Scalar v = a[t] - offset;
    re += v * std::cos(angle);
    im -= v * std::sin(angle);
  }
  return std::hypot(re, im) / static_cast<Scalar>(n);
}

/// Value `lag` steps before the last one.
template <typename Derived>
typename Derived::Scalar lag_value(const Eigen::DenseBase<Derived>& x, int lag) {
  return x.derived().coeff(x.size() - 1 - lag);
}

/// x_last - x_{last - lag}; keeps sign.
template <typename Derived>
typename Derived::Scalar lagged_difference(const Eigen::DenseBase<Derived>& x, int lag) {
  return x.derived().coeff(x.size() - 1) - x.derived().coeff(x.size() - 1 - lag);
}

// ---------------------------------------------------------------------------
// Unit-level features
// ---------------------------------------------------------------------------

struct FeatureRecipe {
  std::vector<int> lag_steps{1, 3, 6, 12};
  std::vector<int> stat_window_steps{kWindowSteps};
  std::vector<Stat> stats{kAllStats.begin(), kAllStats.end()};
  int dft_harmonics = 2;
  std::vector<int> diff_steps{1, 3, 6, 12};
  bool include_demographics = true;
  std::vector<std::string> ethnicities;  // one-of-k columns when non-empty
  bool include_qsofa = false;

  /// Throws when a step does not fit a window of `window_steps`.
  void validate(int window_steps = kWindowSteps) const;
  /// Column names in matrix order.
  std::vector<std::string> column_names() const;
};

using ChannelValues = std::array<double, kNumChannels>;

/// Per channel; sentinel for an all-missing channel.
ChannelValues lag_values(const WindowUnit& unit, int lag);
ChannelValues lagged_differences(const WindowUnit& unit, int lag);
ChannelValues dft_magnitudes(const WindowUnit& unit, int k);
/// Statistics of the trailing `window_steps` ending at the last step.
std::array<WindowStats<double>, kNumChannels> rolling_stats(const WindowUnit& unit,
                                                            int window_steps);

/// age passthrough, gender male 0 / female 1, then optional one-of-k ethnicity.
std::vector<double> encode_demographics(const Demographics* demo,
                                        const std::vector<std::string>& ethnicities = {});

/// One feature row in recipe column order.
Eigen::RowVectorXd feature_row(const WindowUnit& unit, const Demographics* demo,
                               const FeatureRecipe& recipe);

struct FeatureMatrix {
  std::vector<std::string> columns;
  Eigen::MatrixXd values;  // rows x columns, NaN = missing
  std::vector<std::string> unit_ids;
  std::vector<std::string> patient_ids;  // group key
  Eigen::VectorXi labels;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  std::optional<Eigen::Index> column_index(std::string_view name) const;
  FeatureMatrix select_rows(const std::vector<Eigen::Index>& rows) const;
};

/// Rows in (patient_id, start_time) order; assembly is index-addressed so the
/// result does not depend on `workers`.
FeatureMatrix build_feature_matrix(const CohortDataset& dataset, const FeatureRecipe& recipe,
                                   int workers = 1);

/// `unit_id,patient_id,label,<columns...>`; missing cells are empty.
void write_feature_csv(std::ostream& out, const FeatureMatrix& m);
FeatureMatrix read_feature_csv(std::istream& in);

}  // namespace sepsis
