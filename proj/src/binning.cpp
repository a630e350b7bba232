#include "sepsis/trees.hpp"

#include <algorithm>
#include <limits>

namespace sepsis {

namespace {

// Halfway between neighbours, nudged down so that `lo <= edge < hi` survives rounding.
double midpoint_edge(double lo, double hi) {
  double mid = lo + (hi - lo) / 2.0;
  if (!(mid < hi)) mid = lo;
  if (mid < lo) mid = lo;
  return mid;
}

}  // namespace

std::vector<double> quantile_bin_edges(std::span<const double> values, int max_bins) {
  if (max_bins < 2 || max_bins > 65535) throw Error("max_bins must be in [2, 65535]");

  std::vector<double> sorted;
  sorted.reserve(values.size());
  for (double v : values) {
    if (!is_missing(v)) sorted.push_back(v);
  }
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> distinct;
  std::vector<std::int64_t> counts;
  for (double v : sorted) {
    if (distinct.empty() || distinct.back() != v) {
      distinct.push_back(v);
      counts.push_back(1);
    } else {
      ++counts.back();
    }
  }

  std::vector<double> edges;
  const auto n = static_cast<std::int64_t>(sorted.size());
  if (distinct.size() <= static_cast<std::size_t>(max_bins)) {
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
      edges.push_back(midpoint_edge(distinct[i], distinct[i + 1]));
    }
  } else {
    // Cut after distinct value i once the cumulative count reaches the next
    // multiple of n / max_bins.
    std::int64_t acc = 0;
    std::int64_t cuts = 0;
    for (std::size_t i = 0; i + 1 < distinct.size() && cuts < max_bins - 1; ++i) {
      acc += counts[i];
      if (acc * max_bins >= (cuts + 1) * n) {
        edges.push_back(midpoint_edge(distinct[i], distinct[i + 1]));
        ++cuts;
      }
    }
  }
  edges.push_back(std::numeric_limits<double>::infinity());
  return edges;
}

std::uint16_t bin_index(const std::vector<double>& edges, double value) {
  if (is_missing(value)) return kMissingBin;
  const auto it = std::lower_bound(edges.begin(), edges.end(), value);
  const auto b = it == edges.end() ? edges.size() - 1 : static_cast<std::size_t>(it - edges.begin());
  return static_cast<std::uint16_t>(b);
}

BinnedMatrix quantile_bin(const Eigen::MatrixXd& values, int max_bins) {
  BinnedMatrix out;
  out.upper_edges.resize(static_cast<std::size_t>(values.cols()));
  out.bins.resize(values.rows(), values.cols());
  for (Eigen::Index f = 0; f < values.cols(); ++f) {
    const auto col = values.col(f);
    auto& edges = out.upper_edges[static_cast<std::size_t>(f)];
    edges = quantile_bin_edges(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())),
                               max_bins);
    for (Eigen::Index r = 0; r < values.rows(); ++r) out.bins(r, f) = bin_index(edges, col[r]);
  }
  return out;
}

}  // namespace sepsis
