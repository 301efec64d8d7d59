#include "iotgan/learners/random_forest.hpp"

#include <cmath>

#include "iotgan/error.hpp"

namespace iotgan::learners {

RandomForest::RandomForest(std::size_t n_classes, std::vector<DecisionTree> trees)
    : n_classes_(n_classes), trees_(std::move(trees)) {
  if (trees_.empty()) throw ValidationError("a forest needs at least one tree");
  for (const auto& t : trees_)
    if (t.n_classes() != n_classes_) throw ValidationError("forest trees disagree on the class count");
}

RandomForest RandomForest::fit(const Eigen::MatrixXd& x, std::span<const ClassId> y, std::size_t n_classes,
                               const ForestParams& params, std::uint64_t seed) {
  if (params.n_trees == 0) throw ValidationError("forest size must be at least 1");
  const auto n_features = static_cast<std::size_t>(x.cols());
  TreeParams tp;
  tp.max_depth = params.max_depth;
  tp.max_features = params.max_features > 0
                        ? params.max_features
                        : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_features))));

  std::vector<DecisionTree> trees;
  trees.reserve(params.n_trees);
  const std::size_t n = y.size();
  std::vector<std::size_t> bootstrap(n);
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(seed, {t}));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (auto& b : bootstrap) b = pick(rng);
    trees.push_back(DecisionTree::fit(x, y, n_classes, tp, &rng, bootstrap));
  }
  return RandomForest(n_classes, std::move(trees));
}

std::vector<double> RandomForest::scores(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  std::vector<double> votes(n_classes_, 0.0);
  for (const auto& t : trees_) votes[t.predict(x)] += 1.0;
  for (auto& v : votes) v /= static_cast<double>(trees_.size());
  return votes;
}

}  // namespace iotgan::learners
