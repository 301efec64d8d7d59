#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "iotgan/dataset.hpp"

namespace iotgan::learners {

struct SvmParams {
  double lambda = 1e-4;  // L2 regularisation strength, > 0
  std::size_t epochs = 30;
};

/// One-vs-rest linear SVM trained with the Pegasos subgradient method.
/// The bias is folded in as a weight on a constant input.
class LinearSvm {
 public:
  LinearSvm() = default;
  LinearSvm(Eigen::MatrixXd weights, Eigen::VectorXd bias);

  static LinearSvm fit(const Eigen::MatrixXd& x, std::span<const ClassId> y, std::size_t n_classes,
                       const SvmParams& params, std::uint64_t seed);

  Eigen::VectorXd margins(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  /// sigmoid(margin) per class.
  std::vector<double> scores(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

  std::size_t n_classes() const noexcept { return static_cast<std::size_t>(weights_.rows()); }
  const Eigen::MatrixXd& weights() const noexcept { return weights_; }
  const Eigen::VectorXd& bias() const noexcept { return bias_; }

  friend bool operator==(const LinearSvm& a, const LinearSvm& b) {
    return a.weights_.rows() == b.weights_.rows() && a.weights_.cols() == b.weights_.cols() &&
           a.weights_ == b.weights_ && a.bias_.size() == b.bias_.size() && a.bias_ == b.bias_;
  }

 private:
  Eigen::MatrixXd weights_;  // n_classes x n_features
  Eigen::VectorXd bias_;
};

}  // namespace iotgan::learners
