#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "iotgan/learners/decision_tree.hpp"

namespace iotgan::learners {

struct ForestParams {
  std::size_t n_trees = 50;
  std::size_t max_depth = 0;
  std::size_t max_features = 0;  // 0: ceil(sqrt(n_features))
};

/// Bagged CART trees with per-node feature subsampling. Scores are the
/// fraction of trees voting for each class.
class RandomForest {
 public:
  RandomForest() = default;
  RandomForest(std::size_t n_classes, std::vector<DecisionTree> trees);

  static RandomForest fit(const Eigen::MatrixXd& x, std::span<const ClassId> y, std::size_t n_classes,
                          const ForestParams& params, std::uint64_t seed);

  std::vector<double> scores(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

  std::size_t n_classes() const noexcept { return n_classes_; }
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }

  friend bool operator==(const RandomForest&, const RandomForest&) = default;

 private:
  std::size_t n_classes_ = 0;
  std::vector<DecisionTree> trees_;
};

}  // namespace iotgan::learners
