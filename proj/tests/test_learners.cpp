#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "iotgan/error.hpp"
#include "iotgan/learners/classifier.hpp"
#include "iotgan/random.hpp"
#include "test_support.hpp"

using namespace iotgan;
using namespace iotgan::learners;

namespace {

double relative_error(double a, double b) { return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)}); }

}  // namespace

TEST(Mlp, ParameterGradientsMatchCentralDifferences) {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    Mlp net({4, 5, 3}, derive_seed(11, {static_cast<std::uint64_t>(trial)}));
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 4);
    Eigen::MatrixXd t = one_hot({0, 1, 2, 0, 1, 2}, 3);
    const auto lg = mlp_loss_and_gradients(net, x, t);
    const double h = 1e-6;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      for (Eigen::Index i = 0; i < net.weights(l).size(); ++i) {
        Mlp plus = net, minus = net;
        plus.weights(l).data()[i] += h;
        minus.weights(l).data()[i] -= h;
        const double fd = (bce_from_logits(plus.logits(x), t) - bce_from_logits(minus.logits(x), t)) / (2 * h);
        EXPECT_LT(relative_error(fd, lg.gradients.weights[l].data()[i]), 1e-4);
      }
      for (Eigen::Index i = 0; i < net.bias(l).size(); ++i) {
        Mlp plus = net, minus = net;
        plus.bias(l)[i] += h;
        minus.bias(l)[i] -= h;
        const double fd = (bce_from_logits(plus.logits(x), t) - bce_from_logits(minus.logits(x), t)) / (2 * h);
        EXPECT_LT(relative_error(fd, lg.gradients.biases[l][i]), 1e-4);
      }
    }
  }
}

TEST(Mlp, InputGradientMatchesCentralDifferences) {
  Mlp net({5, 8, 4}, 3);
  Eigen::VectorXd x = Eigen::VectorXd::Random(5);
  auto objective = [](const Eigen::VectorXd& out, Eigen::VectorXd& grad) {
    grad = 2.0 * out;
    return out.squaredNorm();
  };
  const Eigen::VectorXd g = mlp_input_gradient(net, x, objective);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd p = x, m = x;
    p[i] += 1e-6;
    m[i] -= 1e-6;
    const double fd = (net.forward(p).squaredNorm() - net.forward(m).squaredNorm()) / 2e-6;
    EXPECT_LT(relative_error(fd, g[i]), 1e-4);
  }
}

TEST(Mlp, BceMatchesDirectFormula) {
  Eigen::MatrixXd z(2, 2);
  z << 0.3, -1.2, 4.0, 0.0;
  Eigen::MatrixXd t(2, 2);
  t << 1, 0, 0, 1;
  double expected = 0.0;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      const double p = 1.0 / (1.0 + std::exp(-z(r, c)));
      expected -= t(r, c) * std::log(p) + (1 - t(r, c)) * std::log(1 - p);
    }
  EXPECT_NEAR(bce_from_logits(z, t), expected / 2.0, 1e-12);
}

TEST(Mlp, InitializationWithinFanInBound) {
  Mlp net({9, 16, 4}, 5);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(net.weights(l).cols()));
    EXPECT_LE(net.weights(l).cwiseAbs().maxCoeff(), bound);
    EXPECT_LE(net.bias(l).cwiseAbs().maxCoeff(), bound);
  }
  EXPECT_EQ(net.parameter_count(), 9u * 16 + 16 + 16 * 4 + 4);
}

TEST(Mlp, TrainingIsDeterministic) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(40, 3);
  std::vector<std::size_t> y(40);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x(static_cast<Eigen::Index>(i), 0) > 0 ? 1 : 0;
  Mlp a({3, 6, 2}, 1), b({3, 6, 2}, 1);
  MlpTrainOptions o;
  o.epochs = 5;
  o.seed = 9;
  train_mlp(a, x, one_hot(y, 2), o);
  train_mlp(b, x, one_hot(y, 2), o);
  EXPECT_EQ(a, b);
}

TEST(Mlp, RejectsNonFiniteInput) {
  Mlp net({2, 2}, 1);
  Eigen::MatrixXd x(1, 2);
  x << std::nan(""), 0.0;
  EXPECT_THROW(mlp_loss_and_gradients(net, x, one_hot({0}, 2)), NumericError);
}

TEST(Knn, AgreesWithBruteForceVote) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd train(60, 3);
  std::vector<ClassId> labels(60);
  for (Eigen::Index r = 0; r < 60; ++r) {
    for (Eigen::Index c = 0; c < 3; ++c) train(r, c) = u(rng);
    labels[static_cast<std::size_t>(r)] = static_cast<ClassId>(r % 4);
  }
  const KnnModel knn(train, labels, 4, 5);
  for (int q = 0; q < 50; ++q) {
    Eigen::RowVectorXd x(3);
    for (int c = 0; c < 3; ++c) x[c] = u(rng);
    std::vector<std::pair<double, std::size_t>> d;
    for (Eigen::Index r = 0; r < 60; ++r) d.emplace_back((train.row(r) - x).squaredNorm(), static_cast<std::size_t>(r));
    std::sort(d.begin(), d.end());
    std::vector<double> votes(4, 0.0);
    for (int k = 0; k < 5; ++k) votes[labels[d[static_cast<std::size_t>(k)].second]] += 1.0;
    const auto s = knn.scores(x);
    EXPECT_EQ(argmax_lowest(s), argmax_lowest(votes));
  }
}

TEST(DecisionTree, FindsStumpOnSeparableColumn) {
  Eigen::MatrixXd x(8, 2);
  x << 0.1, 0.9, 0.2, 0.1, 0.3, 0.5, 0.4, 0.7, 0.6, 0.2, 0.7, 0.8, 0.8, 0.3, 0.9, 0.6;
  const std::vector<ClassId> y{0, 0, 0, 0, 1, 1, 1, 1};
  const auto tree = DecisionTree::fit(x, y, 2, {});
  ASSERT_EQ(tree.nodes().size(), 3u);
  EXPECT_EQ(tree.nodes()[0].feature, 0);
  EXPECT_DOUBLE_EQ(tree.nodes()[0].threshold, 0.5);
  EXPECT_EQ(tree.depth(), 1u);
}

TEST(DecisionTree, DepthLimitHolds) {
  const auto ds = testing_support::blobs(6, 30, 4, 2);
  const Eigen::MatrixXd x = ds.normalized_matrix();
  TreeParams p;
  p.max_depth = 2;
  const auto tree = DecisionTree::fit(x, ds.labels(), 6, p);
  EXPECT_LE(tree.depth(), 2u);
  EXPECT_LE(tree.leaf_count(), 4u);
}

TEST(Classifier, PredictMatchesArgmaxScores) {
  const auto ds = testing_support::blobs(5, 40, 6, 8);
  Rng rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto kind : kAllKinds) {
    Hyperparams hp;
    hp.seed = 4;
    hp.mlp_epochs = 5;
    hp.forest_trees = 10;
    const auto model = fit(kind, ds, hp);
    for (int i = 0; i < 200; ++i) {
      FeatureVector x{std::vector<double>(6)};
      for (auto& v : x.values) v = u(rng);
      EXPECT_EQ(predict(model, x), argmax_lowest(predict_scores(model, x))) << to_string(kind);
    }
  }
}

TEST(Classifier, SaveLoadRoundTrip) {
  const auto ds = testing_support::blobs(3, 20, 4, 5);
  for (auto kind : kAllKinds) {
    Hyperparams hp;
    hp.mlp_epochs = 3;
    hp.forest_trees = 4;
    const auto model = fit(kind, ds, hp);
    std::stringstream ss;
    save_classifier(model, ss);
    const auto back = load_classifier(ss);
    EXPECT_EQ(back, model) << to_string(kind);
  }
}

TEST(Classifier, SingleClassIsDegenerate) {
  const auto ds = testing_support::blobs(1, 10, 3, 1);
  EXPECT_THROW(fit(ClassifierKind::Knn, ds, {}), DegenerateTrainingError);
}

TEST(Classifier, KindNamesRoundTrip) {
  for (auto kind : kAllKinds) EXPECT_EQ(parse_kind(to_string(kind)), kind);
  EXPECT_THROW(parse_kind("perceptron"), ValidationError);
}

TEST(Classifier, ArgmaxTiesGoLow) {
  const std::vector<double> s{0.2, 0.7, 0.7};
  EXPECT_EQ(argmax_lowest(s), 1u);
}
