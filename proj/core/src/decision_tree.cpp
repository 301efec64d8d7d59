#include "iotgan/learners/decision_tree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include <fmt/core.h>

#include "iotgan/error.hpp"

namespace iotgan::learners {

std::size_t argmax_lowest(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

DecisionTree::DecisionTree(std::size_t n_classes, std::size_t n_features, std::vector<TreeNode> nodes)
    : n_classes_(n_classes), n_features_(n_features), nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw ValidationError("decision tree has no nodes");
  const auto n = static_cast<int>(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& node = nodes_[i];
    if (node.is_leaf()) {
      if (node.class_freq.size() != n_classes_)
        throw ValidationError(fmt::format("leaf {} has {} class scores, expected {}", i, node.class_freq.size(),
                                          n_classes_));
    } else {
      if (static_cast<std::size_t>(node.feature) >= n_features_)
        throw ValidationError(fmt::format("node {} splits on unknown feature {}", i, node.feature));
      // Children must come after their parent so traversal terminates.
      const int self = static_cast<int>(i);
      if (node.left <= self || node.left >= n || node.right <= self || node.right >= n)
        throw ValidationError(fmt::format("node {} has invalid children", i));
    }
  }
}

namespace {

struct Builder {
  const Eigen::MatrixXd& x;
  std::span<const ClassId> y;
  std::size_t n_classes;
  const TreeParams& params;
  Rng* rng;
  std::vector<TreeNode> nodes;
  std::vector<std::size_t> features;

  std::vector<double> frequencies(const std::vector<std::size_t>& rows) const {
    std::vector<double> f(n_classes, 0.0);
    for (auto r : rows) f[y[r]] += 1.0;
    for (auto& v : f) v /= static_cast<double>(rows.size());
    return f;
  }

  int grow(std::vector<std::size_t>& rows, std::size_t depth) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();

    std::vector<std::size_t> counts(n_classes, 0);
    for (auto r : rows) ++counts[y[r]];
    const auto distinct = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; });
    const bool depth_capped = params.max_depth > 0 && depth >= params.max_depth;
    if (distinct <= 1 || depth_capped || rows.size() < params.min_samples_split) {
      nodes[static_cast<std::size_t>(id)].class_freq = frequencies(rows);
      return id;
    }

    std::vector<std::size_t> candidates = features;
    if (params.max_features > 0 && params.max_features < features.size()) {
      std::shuffle(candidates.begin(), candidates.end(), *rng);
      candidates.resize(params.max_features);
      std::sort(candidates.begin(), candidates.end());
    }

    const double n = static_cast<double>(rows.size());
    double best_impurity = std::numeric_limits<double>::infinity();
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::pair<double, ClassId>> column(rows.size());
    std::vector<std::size_t> left(n_classes), right(n_classes);

    for (auto f : candidates) {
      for (std::size_t i = 0; i < rows.size(); ++i)
        column[i] = {x(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(f)), y[rows[i]]};
      std::sort(column.begin(), column.end());
      if (column.front().first == column.back().first) continue;

      std::fill(left.begin(), left.end(), 0);
      right = counts;
      double sq_left = 0.0;
      double sq_right = 0.0;
      for (auto c : counts) sq_right += static_cast<double>(c) * static_cast<double>(c);

      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        const ClassId c = column[i].second;
        sq_left += 2.0 * static_cast<double>(left[c]) + 1.0;
        sq_right -= 2.0 * static_cast<double>(right[c]) - 1.0;
        ++left[c];
        --right[c];
        if (column[i].first == column[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = n - nl;
        // Weighted Gini: (nl*(1 - sl/nl^2) + nr*(1 - sr/nr^2)) / n
        const double impurity = (nl - sq_left / nl + nr - sq_right / nr) / n;
        if (impurity < best_impurity) {
          best_impurity = impurity;
          best_feature = static_cast<int>(f);
          double mid = 0.5 * (column[i].first + column[i + 1].first);
          if (!(mid < column[i + 1].first)) mid = column[i].first;
          best_threshold = mid;
        }
      }
    }

    if (best_feature < 0) {
      nodes[static_cast<std::size_t>(id)].class_freq = frequencies(rows);
      return id;
    }

    std::vector<std::size_t> lrows, rrows;
    for (auto r : rows) {
      if (x(static_cast<Eigen::Index>(r), best_feature) <= best_threshold)
        lrows.push_back(r);
      else
        rrows.push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(lrows, depth + 1);
    const int r = grow(rrows, depth + 1);
    auto& node = nodes[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return id;
  }
};

}  // namespace

DecisionTree DecisionTree::fit(const Eigen::MatrixXd& x, std::span<const ClassId> y, std::size_t n_classes,
                               const TreeParams& params, Rng* rng, std::span<const std::size_t> rows) {
  if (static_cast<std::size_t>(x.rows()) != y.size())
    throw ValidationError(fmt::format("{} rows but {} labels", x.rows(), y.size()));
  if (x.rows() == 0) throw ValidationError("cannot fit a tree on zero rows");
  if (params.max_features > 0 && params.max_features < static_cast<std::size_t>(x.cols()) && rng == nullptr)
    throw ValidationError("feature subsampling needs a random generator");
  for (auto label : y)
    if (label >= n_classes) throw ValidationError(fmt::format("label {} >= {}", label, n_classes));

  Builder b{x, y, n_classes, params, rng, {}, {}};
  b.features.resize(static_cast<std::size_t>(x.cols()));
  std::iota(b.features.begin(), b.features.end(), std::size_t{0});
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all.resize(y.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
  } else {
    all.assign(rows.begin(), rows.end());
  }
  b.grow(all, 0);
  return DecisionTree(n_classes, static_cast<std::size_t>(x.cols()), std::move(b.nodes));
}

std::size_t DecisionTree::leaf_of(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& node = nodes_[i];
    i = static_cast<std::size_t>(x(node.feature) <= node.threshold ? node.left : node.right);
  }
  return i;
}

ClassId DecisionTree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return argmax_lowest(scores(x));
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes_[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return best;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const auto& n) { return n.is_leaf(); }));
}

}  // namespace iotgan::learners
