#include "iotgan/learners/knn.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/core.h>

#include "iotgan/error.hpp"

namespace iotgan::learners {

KnnModel::KnnModel(Eigen::MatrixXd train, std::vector<ClassId> labels, std::size_t n_classes, std::size_t k)
    : train_(std::move(train)), labels_(std::move(labels)), n_classes_(n_classes), k_(k) {
  if (k_ == 0) throw ValidationError("k must be at least 1");
  if (static_cast<std::size_t>(train_.rows()) != labels_.size())
    throw ValidationError(fmt::format("{} rows but {} labels", train_.rows(), labels_.size()));
  if (labels_.empty()) throw ValidationError("k-NN needs at least one training row");
  for (auto l : labels_)
    if (l >= n_classes_) throw ValidationError(fmt::format("label {} >= {}", l, n_classes_));
}

std::vector<std::size_t> KnnModel::neighbours(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  const Eigen::VectorXd d = (train_.rowwise() - x).rowwise().squaredNorm();
  std::vector<std::size_t> order(labels_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t k = std::min(k_, order.size());
  auto closer = [&](std::size_t a, std::size_t b) {
    const auto da = d(static_cast<Eigen::Index>(a));
    const auto db = d(static_cast<Eigen::Index>(b));
    return da < db || (da == db && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), closer);
  order.resize(k);
  return order;
}

std::vector<double> KnnModel::scores(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  const auto nn = neighbours(x);
  std::vector<double> votes(n_classes_, 0.0);
  for (auto i : nn) votes[labels_[i]] += 1.0;
  for (auto& v : votes) v /= static_cast<double>(nn.size());
  return votes;
}

}  // namespace iotgan::learners
