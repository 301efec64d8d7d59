#include "iotgan/learners/linear_svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "iotgan/error.hpp"
#include "iotgan/learners/mlp.hpp"
#include "iotgan/random.hpp"

namespace iotgan::learners {

LinearSvm::LinearSvm(Eigen::MatrixXd weights, Eigen::VectorXd bias)
    : weights_(std::move(weights)), bias_(std::move(bias)) {
  if (weights_.rows() != bias_.size()) throw ValidationError("SVM weight rows and bias length differ");
}

LinearSvm LinearSvm::fit(const Eigen::MatrixXd& x, std::span<const ClassId> y, std::size_t n_classes,
                         const SvmParams& params, std::uint64_t seed) {
  if (!(params.lambda > 0.0)) throw ValidationError("SVM regularisation must be > 0");
  if (params.epochs == 0) throw ValidationError("SVM needs at least one epoch");
  if (x.rows() == 0) throw ValidationError("SVM needs at least one training row");

  const auto n = x.rows();
  const auto k = x.cols();
  const auto classes = static_cast<Eigen::Index>(n_classes);
  // Augmented weights: last column multiplies a constant 1.
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(classes, k + 1);
  Eigen::RowVectorXd row(k + 1);
  const double radius = 1.0 / std::sqrt(params.lambda);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(seed);
  double t = 0.0;
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (auto i : order) {
      t += 1.0;
      const double eta = 1.0 / (params.lambda * t);
      row.head(k) = x.row(i);
      row(k) = 1.0;
      const Eigen::VectorXd m = w * row.transpose();
      w *= (1.0 - eta * params.lambda);
      const auto label = static_cast<Eigen::Index>(y[static_cast<std::size_t>(i)]);
      for (Eigen::Index c = 0; c < classes; ++c) {
        const double target = c == label ? 1.0 : -1.0;
        if (target * m(c) < 1.0) w.row(c) += eta * target * row;
      }
      for (Eigen::Index c = 0; c < classes; ++c) {
        const double norm = w.row(c).norm();
        if (norm > radius) w.row(c) *= radius / norm;
      }
    }
  }
  return LinearSvm(w.leftCols(k), w.col(k));
}

Eigen::VectorXd LinearSvm::margins(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return weights_ * x.transpose() + bias_;
}

std::vector<double> LinearSvm::scores(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  const Eigen::VectorXd m = margins(x);
  std::vector<double> s(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.size(); ++i) s[static_cast<std::size_t>(i)] = sigmoid(m(i));
  return s;
}

}  // namespace iotgan::learners
