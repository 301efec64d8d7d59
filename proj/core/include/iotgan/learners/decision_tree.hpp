#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "iotgan/dataset.hpp"
#include "iotgan/random.hpp"

namespace iotgan::learners {

struct TreeParams {
  std::size_t max_depth = 0;  // 0: grow until pure
  std::size_t min_samples_split = 2;
  std::size_t max_features = 0;  // 0: consider every feature at every node
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  std::vector<double> class_freq;  // leaves only; sums to 1

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// CART classification tree: Gini impurity, midpoint thresholds, first-best
/// split in feature order. Node 0 is the root.
class DecisionTree {
 public:
  DecisionTree() = default;
  /// Hand-built tree; validates child links and leaf distributions.
  DecisionTree(std::size_t n_classes, std::size_t n_features, std::vector<TreeNode> nodes);

  /// Fits on the rows of x listed in `rows` (duplicates allowed, used for
  /// bootstrap samples); all rows when `rows` is empty. `rng` is only
  /// consulted when params.max_features restricts the candidate features.
  static DecisionTree fit(const Eigen::MatrixXd& x, std::span<const ClassId> y, std::size_t n_classes,
                          const TreeParams& params, Rng* rng = nullptr, std::span<const std::size_t> rows = {});

  std::size_t leaf_of(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  const std::vector<double>& scores(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    return nodes_[leaf_of(x)].class_freq;
  }
  ClassId predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

  std::size_t n_classes() const noexcept { return n_classes_; }
  std::size_t n_features() const noexcept { return n_features_; }
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t depth() const;
  std::size_t leaf_count() const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::size_t n_classes_ = 0;
  std::size_t n_features_ = 0;
  std::vector<TreeNode> nodes_;
};

/// Index of the largest score; ties go to the lowest index.
std::size_t argmax_lowest(std::span<const double> scores);

}  // namespace iotgan::learners
