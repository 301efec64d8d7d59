#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <type_traits>

#include <gtest/gtest.h>

#include "iotgan/blackbox.hpp"
#include "iotgan/error.hpp"
#include "iotgan/learners/classifier.hpp"
#include "iotgan/substitute.hpp"
#include "test_support.hpp"

using namespace iotgan;
using namespace iotgan::substitute;

namespace {

std::vector<FeatureVector> vectors(const Dataset& ds) {
  std::vector<FeatureVector> out;
  for (const auto& r : ds.rows()) out.push_back(r.x);
  return out;
}

struct Fixture {
  Dataset data = testing_support::blobs(4, 60, 6, 12);
  std::shared_ptr<const learners::Classifier> target;
  std::unique_ptr<blackbox::Oracle> oracle;

  Fixture() {
    learners::Hyperparams hp;
    target = std::make_shared<const learners::Classifier>(learners::fit(learners::ClassifierKind::Svm, data, hp));
    oracle = std::make_unique<blackbox::Oracle>(target, data.schema());
  }
};

}  // namespace

TEST(Oracle, CountsQueriesAndMatchesTarget) {
  Fixture f;
  const auto xs = vectors(f.data);
  const auto corpus = f.oracle->collect(xs);
  EXPECT_EQ(f.oracle->query_log(), xs.size());
  for (std::size_t i = 0; i < xs.size(); i += 17)
    EXPECT_EQ(corpus.data.rows()[i].label, learners::predict(*f.target, xs[i]));
  EXPECT_THROW(f.oracle->collect(std::vector<FeatureVector>{}), ValidationError);
}

TEST(Oracle, ProjectsPoolOntoTargetFeatures) {
  const auto data = testing_support::blobs(3, 30, 5, 2);
  const std::vector<std::size_t> cols{1, 3};
  const auto narrow = data.schema().subset(cols);
  auto target = std::make_shared<const learners::Classifier>(
      learners::fit(learners::ClassifierKind::Knn, data.project(narrow), {}));
  blackbox::Oracle oracle(target, data.schema());
  const auto& x = data.rows()[5].x;
  EXPECT_EQ(oracle.query(x).id, learners::predict(*target, FeatureSchema::project(x, cols)));
  EXPECT_THROW(blackbox::Oracle(target, narrow.subset(std::vector<std::size_t>{0})), ValidationError);
}

TEST(PerformanceGain, ClosedForm) {
  const auto g = performance_gain(0.9, 0.6, 2.0, 1.0);
  ASSERT_TRUE(g.has_value());
  EXPECT_NEAR(*g, ((0.9 - 0.6) / 0.9 - 0.5) / 0.5, 1e-12);
}

TEST(PerformanceGain, UndefinedInputsNeverDivide) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(performance_gain(0.0, 0.5, 1.0, 0.5));
  EXPECT_FALSE(performance_gain(0.9, 0.5, 0.0, 0.5));
  EXPECT_FALSE(performance_gain(0.9, 0.5, 1.0, 1.0));
  EXPECT_FALSE(performance_gain(nan, 0.5, 1.0, 0.5));
  EXPECT_FALSE(performance_gain(0.9, 0.5, inf, 0.5));
  Rng rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double v[] = {u(rng), u(rng), u(rng), u(rng)};
    const int zero = i % 5;
    double a = v[0], b = v[1], c = v[2], d = v[3];
    if (zero == 0) a = 0.0;
    if (zero == 1) c = 0.0;
    if (zero == 2) d = c;
    const auto g = performance_gain(a, b, c, d);
    if (g) {
      EXPECT_TRUE(std::isfinite(*g));
    }
  }
}

TEST(FeatureSelection, TopWeightedTiesToLowerIndex) {
  const std::vector<double> w{0.1, 0.5, 0.5, 0.0, 0.9};
  EXPECT_EQ(top_weighted(w, 3), (std::vector<std::size_t>{1, 2, 4}));
  EXPECT_EQ(top_weighted(w, 2), (std::vector<std::size_t>{1, 4}));
}

TEST(FeatureSelection, SelectSmallestWithinEpsilon) {
  std::vector<PerformanceGainPoint> scan{{2, 0.70, 0, {}}, {4, 0.95, 0, {}}, {6, 0.97, 0, {}}};
  EXPECT_EQ(select_subset(scan, {0.96, 0.02}), 4u);
  EXPECT_EQ(select_subset(scan, {0.999, 0.0}), 6u);
  EXPECT_THROW(select_subset(std::vector<PerformanceGainPoint>{}, {}), ValidationError);
}

TEST(Substitute, LearnsLinearTargetAndFreezes) {
  Fixture f;
  const auto corpus = f.oracle->collect(vectors(f.data));
  std::vector<std::size_t> all(6);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto sub = train_substitute(corpus, all, 40, 3);
  EXPECT_TRUE(sub.frozen());
  EXPECT_EQ(sub.training_curve().size(), 40u);
  EXPECT_GE(sub.holdout_agreement(), 0.90);
  EXPECT_FALSE(sub.holdout_rows().empty());
}

TEST(Substitute, ValidatesInputs) {
  Fixture f;
  const auto corpus = f.oracle->collect(vectors(f.data));
  const std::vector<std::size_t> dup{1, 1};
  const std::vector<std::size_t> out{9};
  const std::vector<std::size_t> ok{0, 1};
  EXPECT_THROW(train_substitute(corpus, dup, 5, 1), ValidationError);
  EXPECT_THROW(train_substitute(corpus, out, 5, 1), ValidationError);
  EXPECT_THROW(train_substitute(corpus, ok, 0, 1), ValidationError);
}

TEST(Substitute, WeightsAndScan) {
  Fixture f;
  const auto corpus = f.oracle->collect(vectors(f.data));
  std::vector<std::size_t> all(6);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto full = train_substitute(corpus, all, 15, 3);
  const auto w = feature_weights(corpus, full, 4, 3);
  ASSERT_EQ(w.size(), 6u);
  for (double v : w) EXPECT_GE(v, 0.0);
  const std::vector<std::size_t> partial{0, 1};
  EXPECT_THROW(feature_weights(corpus, train_substitute(corpus, partial, 2, 1), 4), ContractViolation);

  ScanOptions so;
  so.epochs = 5;
  so.probe_size = 50;
  so.timing_runs = 2;
  const std::vector<std::size_t> sizes{2, 4, 6};
  const auto scan = performance_gain_scan(corpus, w, sizes, so);
  ASSERT_EQ(scan.size(), 3u);
  EXPECT_TRUE(scan[0].undefined());
  for (const auto& p : scan)
    if (p.gain) {
      EXPECT_TRUE(std::isfinite(*p.gain));
    }
  const std::vector<std::size_t> unsorted{4, 2};
  EXPECT_THROW(performance_gain_scan(corpus, w, unsorted, so), ValidationError);
}

TEST(Substitute, SaveLoadKeepsPredictions) {
  Fixture f;
  const auto corpus = f.oracle->collect(vectors(f.data));
  const std::vector<std::size_t> cols{0, 2, 4};
  const auto sub = train_substitute(corpus, cols, 5, 3);
  const auto path = std::filesystem::temp_directory_path() / "iotgan_substitute_test.json";
  save_substitute(sub, path);
  const auto back = load_substitute(path);
  EXPECT_TRUE(back.frozen());
  for (const auto& r : f.data.rows()) EXPECT_EQ(back.predict(r.x), sub.predict(r.x));
  std::filesystem::remove(path);
}

TEST(Probes, StayInRangeAndKeepImmutableColumns) {
  const auto data = testing_support::blobs(3, 20, 5, 4, 2);
  auto target = std::make_shared<const learners::Classifier>(learners::fit(learners::ClassifierKind::Knn, data, {}));
  blackbox::Oracle oracle(target, data.schema());
  auto corpus = oracle.collect(vectors(data));
  blackbox::add_probes(oracle, corpus, 3, 0.25, 8);
  ASSERT_EQ(corpus.probes.size(), 3 * data.size());
  ASSERT_EQ(corpus.probe_origin.size(), corpus.probes.size());
  EXPECT_EQ(oracle.query_log(), 4 * data.size());
  const auto& s = data.schema();
  for (std::size_t i = 0; i < corpus.probes.size(); ++i) {
    const auto& p = corpus.probes[i];
    const auto& h = data.rows()[corpus.probe_origin[i]].x;
    EXPECT_EQ(p.label, learners::predict(*target, p.x));
    for (std::size_t c = 0; c < s.size(); ++c) {
      EXPECT_GE(p.x[c], s[c].min);
      EXPECT_LE(p.x[c], s[c].max);
      if (!s[c].is_mutable) {
        EXPECT_EQ(p.x[c], h[c]);
      } else {
        EXPECT_LE(std::abs(p.x[c] - h[c]), 0.25 * s[c].width() + 1e-12);
      }
    }
  }
}

TEST(Probes, ZeroCopiesAndBadRadius) {
  Fixture f;
  auto corpus = f.oracle->collect(vectors(f.data));
  blackbox::add_probes(*f.oracle, corpus, 0, 0.4, 1);
  EXPECT_TRUE(corpus.probes.empty());
  EXPECT_THROW(blackbox::add_probes(*f.oracle, corpus, 1, 1.5, 1), ValidationError);
  EXPECT_THROW(blackbox::add_probes(*f.oracle, corpus, 1, -0.1, 1), ValidationError);
}

TEST(Probes, HeldOutAgreementIgnoresProbes) {
  Fixture f;
  auto plain = f.oracle->collect(vectors(f.data));
  auto probed = plain;
  // Mislabelled probes around every row: training sees them, the held-out curve must not.
  for (std::size_t r = 0; r < probed.size(); ++r) {
    const auto& row = probed.data.rows()[r];
    probed.probes.push_back(Sample{row.x, (row.label + 1) % probed.data.n_classes()});
    probed.probe_origin.push_back(r);
  }
  std::vector<std::size_t> all(6);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto a = train_substitute(plain, all, 5, 3);
  const auto b = train_substitute(probed, all, 5, 3);
  EXPECT_EQ(a.holdout_rows(), b.holdout_rows());
  for (auto r : b.holdout_rows()) EXPECT_LT(r, probed.size());
  EXPECT_NE(a.training_curve(), b.training_curve());

  probed.probe_origin.back() = probed.size();
  EXPECT_THROW(train_substitute(probed, all, 5, 3), ValidationError);
}

template <class T>
concept HasQueryCollectLog = requires(const T& o, const FeatureVector& x, std::vector<FeatureVector> xs) {
  o.query(x);
  o.collect(xs);
  o.query_log();
};
template <class T>
concept HasTarget = requires(const T& o) { o.target(); };
template <class T>
concept HasModel = requires(const T& o) { o.model(); };
template <class T>
concept HasKind = requires(const T& o) { o.kind(); };
template <class T>
concept HasScores = requires(const T& o, const FeatureVector& x) { o.scores(x); };
template <class T>
concept HasClassNames = requires(const T& o) { o.class_names(); };
template <class T>
concept HasSchema = requires(const T& o) { o.schema(); };
template <class T>
concept HasPoolSchema = requires(const T& o) { o.pool_schema(); };

TEST(Oracle, ExposesOnlyQueryCollectAndLog) {
  using blackbox::Oracle;
  static_assert(HasQueryCollectLog<Oracle>);
  static_assert(!std::is_copy_constructible_v<Oracle> && !std::is_copy_assignable_v<Oracle>);
  static_assert(!HasTarget<Oracle> && !HasModel<Oracle> && !HasKind<Oracle>);
  static_assert(!HasScores<Oracle> && !HasClassNames<Oracle> && !HasSchema<Oracle> && !HasPoolSchema<Oracle>);
  SUCCEED();
}
