#include "sepsis/parallel.hpp"
#include "sepsis/random.hpp"
#include "sepsis/text.hpp"
#include "sepsis/trees.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace sepsis {

namespace {

// Matrix columns reordered to `names`; throws listing what does not line up.
Eigen::MatrixXd align_columns(const FeatureMatrix& m, const std::vector<std::string>& names) {
  if (m.columns == names) return m.values;
  std::vector<std::string> missing, extra;
  const std::set<std::string> have(m.columns.begin(), m.columns.end());
  const std::set<std::string> want(names.begin(), names.end());
  for (const auto& n : names) {
    if (!have.count(n)) missing.push_back(n);
  }
  for (const auto& n : m.columns) {
    if (!want.count(n)) extra.push_back(n);
  }
  if (!missing.empty() || !extra.empty() || m.columns.size() != names.size()) {
    std::string msg = "feature columns do not match the model;";
    const auto list = [&](const char* what, const std::vector<std::string>& v) {
      if (v.empty()) return;
      msg += std::string(" ") + what + ":";
      for (std::size_t i = 0; i < v.size() && i < 10; ++i) msg += " " + v[i];
      if (v.size() > 10) msg += " (+" + std::to_string(v.size() - 10) + " more)";
    };
    list("missing", missing);
    list("extra", extra);
    if (missing.empty() && extra.empty()) msg += " duplicate column names";
    throw Error(msg);
  }
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = m.values.col(*m.column_index(names[j]));
  }
  return out;
}

}  // namespace

Eigen::VectorXd BoostedModel::predict_margin(const FeatureMatrix& m) const {
  const Eigen::MatrixXd x = align_columns(m, feature_names);
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) out[r] = margin(x.row(r));
  return out;
}

Eigen::VectorXd BoostedModel::predict_proba(const FeatureMatrix& m) const {
  return predict_margin(m).unaryExpr([](double v) { return sigmoid(v); });
}

Eigen::VectorXd predict_proba(const BoostedModel& model, const FeatureMatrix& m) {
  return model.predict_proba(m);
}

BoostedModel train(const FeatureMatrix& matrix, const BoostParams& params, int workers,
                   TrainTrace* trace) {
  params.validate();
  const auto n = matrix.rows();
  if (n < 2) throw Error("training needs at least 2 rows");
  if (matrix.labels.size() != n) throw Error("label count does not match row count");
  const auto positives = static_cast<double>((matrix.labels.array() == 1).count());
  const auto negatives = static_cast<double>(n) - positives;
  if (positives == 0 || negatives == 0) throw Error("degenerate labels");
  if (!(params.pos_weight > 0.0)) throw Error("pos_weight must be > 0 for training");

  BoostedModel model;
  model.params = params;
  model.feature_names = matrix.columns;
  const double pbar = params.pos_weight * positives / (params.pos_weight * positives + negatives);
  model.base_score = std::log(pbar / (1.0 - pbar));

  const BinnedMatrix binned = quantile_bin(matrix.values, params.max_bins);
  WorkerPool pool(workers);
  Rng rng(params.seed);

  std::vector<double> margins(static_cast<std::size_t>(n), model.base_score);
  std::vector<double> g(margins.size()), h(margins.size());
  const auto record_loss = [&] {
    if (trace == nullptr) return;
    double loss = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
      loss += weighted_logloss(matrix.labels[r], margins[static_cast<std::size_t>(r)], params.pos_weight);
    }
    trace->train_loss.push_back(loss);
  };
  record_loss();

  const auto n_rows = static_cast<int>(n);
  const auto n_features = static_cast<int>(matrix.cols());
  for (int t = 0; t < params.num_trees; ++t) {
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto gh = logistic_grad_hess(matrix.labels[r], margins[static_cast<std::size_t>(r)],
                                         params.pos_weight);
      g[static_cast<std::size_t>(r)] = gh.g;
      h[static_cast<std::size_t>(r)] = gh.h;
    }
    std::vector<int> rows, features;
    if (params.subsample < 1.0) {
      const int k = std::max(1, static_cast<int>(std::lround(params.subsample * n_rows)));
      rows = rng.sample_without_replacement(n_rows, k);
    }
    if (params.colsample < 1.0) {
      const int k = std::max(1, static_cast<int>(std::lround(params.colsample * n_features)));
      features = rng.sample_without_replacement(n_features, k);
    }
    auto tree = grow_tree(binned, g, h, params, rows, features, &pool);
    for (Eigen::Index r = 0; r < n; ++r) {
      margins[static_cast<std::size_t>(r)] += params.learning_rate * tree.predict(matrix.values.row(r));
    }
    model.trees.push_back(std::move(tree));
    record_loss();
  }
  return model;
}

// ---------------------------------------------------------------------------
// Text model format
// ---------------------------------------------------------------------------

void save_model(std::ostream& out, const BoostedModel& model) {
  const auto& p = model.params;
  const auto num = [](double v) { return text::format_double(v, 17); };
  out << "format_version=1\n";
  out << "growth=" << growth_name(p.growth) << '\n';
  out << "num_trees=" << p.num_trees << '\n';
  out << "learning_rate=" << num(p.learning_rate) << '\n';
  out << "max_depth=" << p.max_depth << '\n';
  out << "max_leaves=" << p.max_leaves << '\n';
  out << "lambda=" << num(p.lambda) << '\n';
  out << "gamma=" << num(p.gamma) << '\n';
  out << "min_child_weight=" << num(p.min_child_weight) << '\n';
  out << "min_samples_leaf=" << p.min_samples_leaf << '\n';
  out << "max_bins=" << p.max_bins << '\n';
  out << "pos_weight=" << num(p.pos_weight) << '\n';
  out << "subsample=" << num(p.subsample) << '\n';
  out << "colsample=" << num(p.colsample) << '\n';
  out << "seed=" << p.seed << '\n';
  out << "base_score=" << num(model.base_score) << '\n';
  out << "num_features=" << model.feature_names.size() << '\n';
  for (std::size_t i = 0; i < model.feature_names.size(); ++i) {
    out << "feature " << i << ' ' << model.feature_names[i] << '\n';
  }
  out << "trees=" << model.trees.size() << '\n';
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    const auto& tree = model.trees[t];
    out << "tree " << t << " nodes=" << tree.nodes.size() << '\n';
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      const auto& nd = tree.nodes[i];
      if (nd.is_leaf) {
        out << "node " << i << " leaf " << num(nd.weight) << '\n';
      } else {
        out << "node " << i << " split " << nd.feature << ' ' << num(nd.threshold)
            << " default=" << (nd.default_direction == DefaultDirection::left ? 'L' : 'R')
            << " left=" << nd.left << " right=" << nd.right << '\n';
      }
    }
  }
}

namespace {

class ModelReader {
 public:
  explicit ModelReader(std::istream& in) : in_(in) {}

  std::vector<std::string> next_tokens() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!text::trim(line).empty()) {
        std::istringstream ss(line);
        std::vector<std::string> tokens;
        for (std::string tok; ss >> tok;) tokens.push_back(tok);
        return tokens;
      }
    }
    fail("unexpected end of document");
  }

  std::string value_of(std::string_view key) {
    const auto tokens = next_tokens();
    const std::string prefix = std::string(key) + "=";
    if (tokens.size() != 1 || tokens[0].rfind(prefix, 0) != 0) fail("expected '" + prefix + "...'");
    return tokens[0].substr(prefix.size());
  }

  double real(std::string_view key) { return parse_real(value_of(key), key); }

  long long integer(std::string_view key) { return parse_integer(value_of(key), key); }

  double parse_real(const std::string& s, std::string_view field) {
    const auto v = text::parse_double(s);
    if (!v) fail("bad number for " + std::string(field) + ": '" + s + "'");
    return *v;
  }

  long long parse_integer(const std::string& s, std::string_view field) {
    const auto v = text::parse_int(s);
    if (!v) fail("bad integer for " + std::string(field) + ": '" + s + "'");
    return *v;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error("model file line " + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

}  // namespace

BoostedModel load_model(std::istream& in) {
  ModelReader rd(in);
  BoostedModel model;
  auto& p = model.params;
  if (rd.value_of("format_version") != "1") rd.fail("unsupported format_version");
  const auto growth = parse_growth(rd.value_of("growth"));
  if (!growth) rd.fail("unknown growth");
  p.growth = *growth;
  p.num_trees = static_cast<int>(rd.integer("num_trees"));
  p.learning_rate = rd.real("learning_rate");
  p.max_depth = static_cast<int>(rd.integer("max_depth"));
  p.max_leaves = static_cast<int>(rd.integer("max_leaves"));
  p.lambda = rd.real("lambda");
  p.gamma = rd.real("gamma");
  p.min_child_weight = rd.real("min_child_weight");
  p.min_samples_leaf = static_cast<int>(rd.integer("min_samples_leaf"));
  p.max_bins = static_cast<int>(rd.integer("max_bins"));
  p.pos_weight = rd.real("pos_weight");
  p.subsample = rd.real("subsample");
  p.colsample = rd.real("colsample");
  p.seed = static_cast<std::uint64_t>(rd.integer("seed"));
  model.base_score = rd.real("base_score");

  const auto num_features = rd.integer("num_features");
  if (num_features < 0) rd.fail("negative num_features");
  for (long long i = 0; i < num_features; ++i) {
    const auto tok = rd.next_tokens();
    if (tok.size() != 3 || tok[0] != "feature" || rd.parse_integer(tok[1], "feature index") != i) {
      rd.fail("expected 'feature " + std::to_string(i) + " <name>'");
    }
    model.feature_names.push_back(tok[2]);
  }

  const auto num_trees = rd.integer("trees");
  if (num_trees < 0) rd.fail("negative tree count");
  for (long long t = 0; t < num_trees; ++t) {
    auto tok = rd.next_tokens();
    if (tok.size() != 3 || tok[0] != "tree" || rd.parse_integer(tok[1], "tree index") != t ||
        tok[2].rfind("nodes=", 0) != 0) {
      rd.fail("expected 'tree " + std::to_string(t) + " nodes=<n>'");
    }
    const auto n_nodes = rd.parse_integer(tok[2].substr(6), "nodes");
    if (n_nodes < 1) rd.fail("a tree needs at least one node");
    RegressionTree tree;
    tree.nodes.resize(static_cast<std::size_t>(n_nodes));
    for (long long i = 0; i < n_nodes; ++i) {
      tok = rd.next_tokens();
      if (tok.size() < 3 || tok[0] != "node" || rd.parse_integer(tok[1], "node id") != i) {
        rd.fail("expected 'node " + std::to_string(i) + " ...'");
      }
      auto& nd = tree.nodes[static_cast<std::size_t>(i)];
      if (tok[2] == "leaf" && tok.size() == 4) {
        nd.is_leaf = true;
        nd.weight = rd.parse_real(tok[3], "leaf weight");
      } else if (tok[2] == "split" && tok.size() == 8) {
        nd.is_leaf = false;
        nd.feature = static_cast<int>(rd.parse_integer(tok[3], "feature"));
        nd.threshold = rd.parse_real(tok[4], "threshold");
        if (tok[5] == "default=L") {
          nd.default_direction = DefaultDirection::left;
        } else if (tok[5] == "default=R") {
          nd.default_direction = DefaultDirection::right;
        } else {
          rd.fail("default must be L or R");
        }
        if (tok[6].rfind("left=", 0) != 0 || tok[7].rfind("right=", 0) != 0) rd.fail("expected left=/right=");
        nd.left = static_cast<int>(rd.parse_integer(tok[6].substr(5), "left"));
        nd.right = static_cast<int>(rd.parse_integer(tok[7].substr(6), "right"));
        if (nd.feature < 0 || nd.feature >= num_features) rd.fail("feature index out of range");
        if (nd.left <= i || nd.right <= i || nd.left >= n_nodes || nd.right >= n_nodes) {
          rd.fail("child ids must point forward inside the tree");
        }
      } else {
        rd.fail("malformed node line");
      }
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

}  // namespace sepsis
