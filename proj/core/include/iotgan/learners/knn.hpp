#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "iotgan/dataset.hpp"

namespace iotgan::learners {

/// Brute-force k-nearest-neighbours under Euclidean distance.
/// Equal distances are ordered by training-row index.
class KnnModel {
 public:
  KnnModel() = default;
  KnnModel(Eigen::MatrixXd train, std::vector<ClassId> labels, std::size_t n_classes, std::size_t k);

  /// Training-row indices of the k nearest rows, nearest first.
  std::vector<std::size_t> neighbours(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  /// Vote fraction per class among the k neighbours.
  std::vector<double> scores(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

  std::size_t k() const noexcept { return k_; }
  std::size_t n_classes() const noexcept { return n_classes_; }
  const Eigen::MatrixXd& train() const noexcept { return train_; }
  const std::vector<ClassId>& labels() const noexcept { return labels_; }

  friend bool operator==(const KnnModel&, const KnnModel&) = default;

 private:
  Eigen::MatrixXd train_;
  std::vector<ClassId> labels_;
  std::size_t n_classes_ = 0;
  std::size_t k_ = 1;
};

}  // namespace iotgan::learners
