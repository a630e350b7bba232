#include "sepsis/parallel.hpp"
#include "sepsis/trees.hpp"

#include <algorithm>
#include <numeric>

namespace sepsis {

int RegressionTree::leaf_count() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(),
                                        [](const TreeNode& n) { return n.is_leaf; }));
}

int RegressionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> depth(nodes.size(), 0);
  int deepest = 0;
  // Children always have larger ids than their parent.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.is_leaf) {
      deepest = std::max(deepest, depth[i]);
      continue;
    }
    depth[static_cast<std::size_t>(n.left)] = depth[i] + 1;
    depth[static_cast<std::size_t>(n.right)] = depth[i] + 1;
  }
  return deepest;
}

namespace {

struct Leaf {
  int node = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  int depth = 0;
  int creation = 0;
  NodeHistogram hist;
  std::optional<SplitCandidate> split;

  std::size_t size() const { return end - begin; }
};

class TreeBuilder {
 public:
  TreeBuilder(const BinnedMatrix& binned, std::span<const double> g, std::span<const double> h,
              const BoostParams& params, std::span<const int> rows, std::span<const int> features,
              WorkerPool* pool)
      : binned_(binned), g_(g), h_(h), params_(params), constraints_(params.constraints()),
        pool_(pool) {
    if (rows.empty()) {
      rows_.resize(static_cast<std::size_t>(binned.rows()));
      std::iota(rows_.begin(), rows_.end(), 0);
    } else {
      rows_.assign(rows.begin(), rows.end());
    }
    if (features.empty()) {
      features_.resize(static_cast<std::size_t>(binned.features()));
      std::iota(features_.begin(), features_.end(), 0);
    } else {
      features_.assign(features.begin(), features.end());
    }
  }

  RegressionTree build() {
    tree_.nodes.assign(1, TreeNode{});
    Leaf root;
    root.node = 0;
    root.begin = 0;
    root.end = rows_.size();
    root.creation = next_creation_++;
    if (params_.growth == Growth::depthwise) {
      grow_depthwise(std::move(root));
    } else {
      grow_leafwise(std::move(root));
    }
    return std::move(tree_);
  }

 private:
  bool splittable(const Leaf& leaf) const {
    const auto min_leaf = static_cast<std::size_t>(std::max(1, params_.min_samples_leaf));
    return leaf.size() >= 2 * min_leaf;
  }

  void build_histogram(Leaf& leaf) {
    leaf.hist.assign(static_cast<std::size_t>(binned_.features()), FeatureHistogram{});
    const auto work = [&](std::size_t i) {
      const int f = features_[i];
      auto& fh = leaf.hist[static_cast<std::size_t>(f)];
      fh.bins.assign(static_cast<std::size_t>(binned_.num_bins(f)), HistBin{});
      const auto col = binned_.bins.col(f);
      for (std::size_t k = leaf.begin; k < leaf.end; ++k) {
        const int r = rows_[k];
        const auto b = col[r];
        HistBin& slot = b == kMissingBin ? fh.missing : fh.bins[b];
        slot.g += g_[static_cast<std::size_t>(r)];
        slot.h += h_[static_cast<std::size_t>(r)];
        ++slot.count;
      }
    };
    if (pool_ != nullptr) {
      pool_->parallel_for(features_.size(), work);
    } else {
      for (std::size_t i = 0; i < features_.size(); ++i) work(i);
    }
  }

  // hist -= sibling, bin by bin.
  static void subtract_histogram(NodeHistogram& hist, const NodeHistogram& sibling) {
    for (std::size_t f = 0; f < hist.size(); ++f) {
      auto& fo = hist[f];
      const auto& fs = sibling[f];
      for (std::size_t b = 0; b < fo.bins.size(); ++b) fo.bins[b] -= fs.bins[b];
      fo.missing -= fs.missing;
    }
  }

  void find_split(Leaf& leaf) {
    leaf.split.reset();
    if (!splittable(leaf) || leaf.hist.empty()) return;
    leaf.split = best_split(leaf.hist, constraints_, features_);
  }

  // Turns the leaf's node into a split and returns the two children, with
  // histograms when `need_hist` is set.
  std::pair<Leaf, Leaf> apply_split(Leaf& leaf, bool need_hist) {
    const auto& s = *leaf.split;
    const auto col = binned_.bins.col(s.feature);
    const bool missing_left = s.default_direction == DefaultDirection::left;
    const auto first = rows_.begin() + static_cast<std::ptrdiff_t>(leaf.begin);
    const auto last = rows_.begin() + static_cast<std::ptrdiff_t>(leaf.end);
    const auto mid = std::stable_partition(first, last, [&](int r) {
      const auto b = col[r];
      return b == kMissingBin ? missing_left : static_cast<int>(b) <= s.bin;
    });

    const int left_id = static_cast<int>(tree_.nodes.size());
    auto& node = tree_.nodes[static_cast<std::size_t>(leaf.node)];
    node.is_leaf = false;
    node.feature = s.feature;
    node.threshold = binned_.upper_edges[static_cast<std::size_t>(s.feature)][static_cast<std::size_t>(s.bin)];
    node.default_direction = s.default_direction;
    node.left = left_id;
    node.right = left_id + 1;
    tree_.nodes.emplace_back();
    tree_.nodes.emplace_back();

    Leaf l, r;
    l.node = left_id;
    r.node = left_id + 1;
    l.begin = leaf.begin;
    l.end = r.begin = static_cast<std::size_t>(mid - rows_.begin());
    r.end = leaf.end;
    l.depth = r.depth = leaf.depth + 1;
    l.creation = next_creation_++;
    r.creation = next_creation_++;

    if (need_hist && (splittable(l) || splittable(r))) {
      Leaf& small = l.size() <= r.size() ? l : r;
      Leaf& large = l.size() <= r.size() ? r : l;
      build_histogram(small);
      if (splittable(large)) {
        large.hist = std::move(leaf.hist);
        subtract_histogram(large.hist, small.hist);
      }
    }
    leaf.hist.clear();
    leaf.hist.shrink_to_fit();
    return {std::move(l), std::move(r)};
  }

  void finalize(const Leaf& leaf) {
    double g = 0.0, h = 0.0;
    for (std::size_t k = leaf.begin; k < leaf.end; ++k) {
      const auto r = static_cast<std::size_t>(rows_[k]);
      g += g_[r];
      h += h_[r];
    }
    auto& node = tree_.nodes[static_cast<std::size_t>(leaf.node)];
    node.is_leaf = true;
    node.weight = leaf.size() == 0 ? 0.0 : leaf_weight(g, h, params_.lambda);
  }

  void grow_depthwise(Leaf root) {
    std::vector<Leaf> level;
    if (params_.max_depth > 0 && splittable(root)) {
      build_histogram(root);
      find_split(root);
    }
    level.push_back(std::move(root));
    for (int d = 0; d < params_.max_depth; ++d) {
      std::vector<Leaf> next;
      const bool children_split = d + 1 < params_.max_depth;
      for (auto& leaf : level) {
        if (!leaf.split) {
          finalize(leaf);
          continue;
        }
        auto [l, r] = apply_split(leaf, children_split);
        if (children_split) {
          find_split(l);
          find_split(r);
        }
        next.push_back(std::move(l));
        next.push_back(std::move(r));
      }
      level = std::move(next);
    }
    for (const auto& leaf : level) finalize(leaf);
  }

  void grow_leafwise(Leaf root) {
    std::vector<Leaf> frontier;
    if (params_.max_leaves > 1 && splittable(root)) {
      build_histogram(root);
      find_split(root);
    }
    frontier.push_back(std::move(root));
    int leaves = 1;
    while (leaves < params_.max_leaves) {
      // Max-priority on (gain, -creation).
      std::optional<std::size_t> pick;
      for (std::size_t i = 0; i < frontier.size(); ++i) {
        const auto& c = frontier[i];
        if (!c.split) continue;
        if (!pick) {
          pick = i;
          continue;
        }
        const auto& p = frontier[*pick];
        if (c.split->gain > p.split->gain ||
            (c.split->gain == p.split->gain && c.creation < p.creation)) {
          pick = i;
        }
      }
      if (!pick) break;
      Leaf chosen = std::move(frontier[*pick]);
      frontier.erase(frontier.begin() + static_cast<std::ptrdiff_t>(*pick));
      auto [l, r] = apply_split(chosen, true);
      find_split(l);
      find_split(r);
      frontier.push_back(std::move(l));
      frontier.push_back(std::move(r));
      ++leaves;
    }
    for (const auto& leaf : frontier) finalize(leaf);
  }

  const BinnedMatrix& binned_;
  std::span<const double> g_;
  std::span<const double> h_;
  const BoostParams& params_;
  SplitConstraints constraints_;
  WorkerPool* pool_;
  std::vector<int> rows_;
  std::vector<int> features_;
  RegressionTree tree_;
  int next_creation_ = 0;
};

}  // namespace

RegressionTree grow_tree(const BinnedMatrix& binned, std::span<const double> g,
                         std::span<const double> h, const BoostParams& params,
                         std::span<const int> rows, std::span<const int> features,
                         WorkerPool* pool) {
  if (g.size() != static_cast<std::size_t>(binned.rows()) || h.size() != g.size()) {
    throw Error("grow_tree: gradient/hessian length must equal row count");
  }
  return TreeBuilder(binned, g, h, params, rows, features, pool).build();
}

}  // namespace sepsis
