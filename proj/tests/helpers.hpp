#pragma once

#include "sepsis/core.hpp"
#include "sepsis/features.hpp"
#include "sepsis/random.hpp"

#include <cstring>
#include <functional>
#include <string>
#include <vector>

namespace testing {

using namespace sepsis;

/// A 72-step unit whose channel c at step s is f(c, s).
inline WindowUnit make_unit(const std::string& pid, Timestamp start,
                            const std::function<double(std::size_t, int)>& f, Label label = Label::negative) {
  WindowUnit u;
  u.patient_id = pid;
  u.start_time = start;
  u.unit_id = make_unit_id(pid, start);
  u.label = label;
  u.grid.resize(kWindowSteps, kNumChannels);
  for (int s = 0; s < kWindowSteps; ++s) {
    for (std::size_t c = 0; c < kNumChannels; ++c) u.grid(s, static_cast<Eigen::Index>(c)) = f(c, s);
  }
  u.channel_observed_counts.fill(kWindowSteps);
  return u;
}

/// Element-wise equality of bit patterns; NaN equals NaN.
template <typename A, typename B>
bool bit_equal(const Eigen::DenseBase<A>& a, const Eigen::DenseBase<B>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      const double x = a.derived().coeff(r, c), y = b.derived().coeff(r, c);
      if (std::memcmp(&x, &y, sizeof x) != 0) return false;
    }
  }
  return true;
}

/// Dense random matrix; label = 1 when the first column plus noise is positive.
inline FeatureMatrix random_matrix(Rng& rng, int rows, int cols, double missing_rate = 0.0,
                                   int units_per_patient = 3) {
  FeatureMatrix m;
  m.values.resize(rows, cols);
  m.labels.resize(rows);
  for (int c = 0; c < cols; ++c) m.columns.push_back("f" + std::to_string(c));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      m.values(r, c) = rng.bernoulli(missing_rate) ? kMissing : rng.normal();
    }
    const double x0 = is_missing(m.values(r, 0)) ? 0.0 : m.values(r, 0);
    m.labels[r] = x0 + 0.5 * rng.normal() > 0.0 ? 1 : 0;
    m.unit_ids.push_back("u" + std::to_string(r));
    m.patient_ids.push_back("p" + std::to_string(r / units_per_patient));
  }
  return m;
}

}  // namespace testing
