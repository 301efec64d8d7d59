#include <cmath>
#include <bit>
#include <cstdint>
#include <memory>
#include <numeric>

#include <gtest/gtest.h>

#include "iotgan/blackbox.hpp"
#include "iotgan/camouflage.hpp"
#include "iotgan/error.hpp"
#include "iotgan/learners/classifier.hpp"
#include "test_support.hpp"

using namespace iotgan;
using namespace iotgan::camouflage;

namespace {

std::vector<FeatureVector> vectors(const Dataset& ds) {
  std::vector<FeatureVector> out;
  for (const auto& r : ds.rows()) out.push_back(r.x);
  return out;
}

Generator scrambled_generator(const FeatureSchema& schema, std::uint64_t seed) {
  Generator g(schema, {{16}, 0.4, seed});
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, 2.0);
  auto& last = g.net().weights(g.net().layer_count() - 1);
  for (Eigen::Index i = 0; i < last.size(); ++i) last.data()[i] = n(rng);
  return g;
}

FeatureSchema mixed_schema() {
  return FeatureSchema({{"a", "s", 0, 600, true},
                        {"b", "", -5, 5, false},
                        {"c", "B", 0, 1e6, true},
                        {"d", "", 0, 1, false},
                        {"e", "", 10, 10, true},
                        {"f", "", 0, 1, true}});
}

}  // namespace

TEST(Noise, MultiplierBoundsAndMask) {
  const auto s = mixed_schema();
  const FeatureVector h{{300, 1, 5e5, 1, 10, 0.5}};
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto n = make_noise(h, s, seed);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!s[i].is_mutable) {
        EXPECT_EQ(n.r.r[i], 0.0);
      } else {
        EXPECT_GE(n.r.r[i], 0.0);
        EXPECT_LE(n.r.r[i], kMaxMultiplier);
      }
      EXPECT_DOUBLE_EQ(n.s[i], n.r.r[i] * h[i]);
    }
  }
}

TEST(Generator, ImmutableBitEqualAndInRange) {
  const auto s = mixed_schema();
  Rng rng(1);
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    const auto g = scrambled_generator(s, trial);
    std::vector<FeatureVector> rows;
    for (int i = 0; i < 400; ++i) {
      FeatureVector h{std::vector<double>(s.size())};
      for (std::size_t j = 0; j < s.size(); ++j) h[j] = std::uniform_real_distribution<double>(s[j].min, s[j].max)(rng);
      if (i % 7 == 0) h[0] = s[0].max;
      rows.push_back(h);
    }
    const auto out = manipulate_all(g, rows, trial);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      EXPECT_TRUE(s.contains(out[r]));
      for (std::size_t j = 0; j < s.size(); ++j) {
        if (!s[j].is_mutable) {
          EXPECT_EQ(std::bit_cast<std::uint64_t>(out[r].values[j]), std::bit_cast<std::uint64_t>(rows[r].values[j]));
        }
        EXPECT_LE(std::abs(out[r][j] - rows[r][j]), g.budget() * s[j].width() * (1 + 1e-12) + 1e-9);
      }
    }
  }
}

TEST(Generator, UntrainedIsNearIdentity) {
  const auto s = mixed_schema();
  const Generator g(s);
  const FeatureVector h{{120, 2, 3e5, 0, 10, 0.25}};
  const auto n = make_noise(h, s, 3);
  const auto out = manipulate(g, h, n.s);
  for (std::size_t j = 0; j < s.size(); ++j) EXPECT_NEAR(out[j], h[j], 1e-9 * std::max(1.0, s[j].width()));
}

TEST(Generator, RejectsBadInput) {
  const auto s = mixed_schema();
  const Generator g(s);
  const FeatureVector bad{{700, 0, 0, 0, 10, 0}};
  const std::vector<double> zeros(s.size(), 0.0);
  EXPECT_THROW(manipulate(g, bad, zeros), ValidationError);
  EXPECT_THROW(manipulate(g, FeatureVector{{1.0}}, zeros), ValidationError);
}

TEST(Generator, SaveLoadRoundTrip) {
  const auto g = scrambled_generator(mixed_schema(), 4);
  const auto path = std::filesystem::temp_directory_path() / "iotgan_generator_test.json";
  save_generator(g, path);
  const auto back = load_generator(path);
  EXPECT_EQ(back.net(), g.net());
  EXPECT_EQ(back.schema(), g.schema());
  EXPECT_EQ(back.budget(), g.budget());
  std::filesystem::remove(path);
}

class AttackFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    data = testing_support::blobs(4, 80, 6, 31, 2);
    target = std::make_shared<const learners::Classifier>(learners::fit(learners::ClassifierKind::Knn, data, {}));
    oracle = std::make_unique<blackbox::Oracle>(target, data.schema());
    const auto corpus = oracle->collect(vectors(data));
    std::vector<std::size_t> all(6);
    std::iota(all.begin(), all.end(), std::size_t{0});
    sub = std::make_unique<substitute::SubstituteModel>(substitute::train_substitute(corpus, all, 40, 5));
  }

  Dataset data;
  std::shared_ptr<const learners::Classifier> target;
  std::unique_ptr<blackbox::Oracle> oracle;
  std::unique_ptr<substitute::SubstituteModel> sub;
};

TEST_F(AttackFixture, MisidentifyLowersIdentification) {
  GeneratorTrainOptions o;
  o.epochs = 20;
  o.seed = 2;
  std::size_t observed = 0;
  const auto g = train_generator(Generator(data.schema(), {{64, 64}, 0.4, 1}), *sub, data, AttackMode::misidentify(), o,
                                 [&](std::size_t, const Generator&) { ++observed; });
  EXPECT_EQ(observed, g.training_curve().size());
  const auto rep = evaluate_attack(g, identifier(*oracle), data, AttackMode::misidentify(), 8);
  EXPECT_GT(rep.clean_rate, 0.95);
  EXPECT_LT(rep.rate, rep.clean_rate - 0.3);
  EXPECT_EQ(oracle->query_log(), data.size() + 2 * data.size());
}

TEST_F(AttackFixture, SpoofRaisesTargetShare) {
  GeneratorTrainOptions o;
  o.epochs = 20;
  const auto mode = AttackMode::spoof(2);
  const auto before = substitute_success(Generator(data.schema()), *sub, vectors(data), mode, 1);
  const auto g = train_generator(Generator(data.schema(), {{64, 64}, 0.4, 1}), *sub, data, mode, o);
  EXPECT_GT(substitute_success(g, *sub, vectors(data), mode, 1), before + 0.3);
}

TEST_F(AttackFixture, TrainingIsDeterministic) {
  GeneratorTrainOptions o;
  o.epochs = 3;
  const auto a = train_generator(Generator(data.schema()), *sub, data, AttackMode::misidentify(), o);
  const auto b = train_generator(Generator(data.schema()), *sub, data, AttackMode::misidentify(), o);
  EXPECT_EQ(a.net(), b.net());
  EXPECT_EQ(a.training_curve(), b.training_curve());
}

TEST_F(AttackFixture, RejectsBadOptions) {
  GeneratorTrainOptions o;
  o.epochs = 0;
  EXPECT_THROW(train_generator(Generator(data.schema()), *sub, data, AttackMode::misidentify(), o), ValidationError);
  o.epochs = 2;
  EXPECT_THROW(train_generator(Generator(data.schema()), *sub, data, AttackMode::spoof(99), o), ValidationError);
}

TEST_F(AttackFixture, GeneratorGradientsMatchCentralDifferences) {
  Generator g(data.schema(), {{8}, 0.05, 3});
  Rng rng(4);
  std::normal_distribution<double> n(0.0, 0.5);
  for (std::size_t l = 0; l < g.net().layer_count(); ++l)
    for (Eigen::Index i = 0; i < g.net().weights(l).size(); ++i) g.net().weights(l).data()[i] = n(rng);
  const Eigen::MatrixXd u = data.normalized_matrix().topRows(6);
  const Eigen::MatrixXd s_u = 0.05 * u;
  const Eigen::MatrixXd t = learners::one_hot({0, 1, 2, 3, 0, 1}, 4);
  const auto step = generator_gradients(g, *sub, u, s_u, t);
  for (std::size_t l = 0; l < g.net().layer_count(); ++l)
    for (Eigen::Index i = 0; i < g.net().weights(l).size(); ++i) {
      Generator plus = g, minus = g;
      plus.net().weights(l).data()[i] += 1e-6;
      minus.net().weights(l).data()[i] -= 1e-6;
      const double fd = (generator_gradients(plus, *sub, u, s_u, t).loss - generator_gradients(minus, *sub, u, s_u, t).loss) / 2e-6;
      const double an = step.gradients.weights[l].data()[i];
      EXPECT_NEAR(fd, an, 1e-6 + 1e-4 * std::abs(fd));
    }
}

TEST_F(AttackFixture, AscentNegatesLossAndGradients) {
  const Generator g(data.schema(), {{8}, 0.2, 5});
  const Eigen::MatrixXd u = data.normalized_matrix().topRows(5);
  const Eigen::MatrixXd s_u = 0.1 * u;
  const Eigen::MatrixXd t = learners::one_hot({3, 2, 1, 0, 3}, 4);
  const auto down = generator_gradients(g, *sub, u, s_u, t);
  const auto up = generator_gradients(g, *sub, u, s_u, t, true);
  EXPECT_DOUBLE_EQ(up.loss, -down.loss);
  for (std::size_t l = 0; l < g.net().layer_count(); ++l) {
    EXPECT_TRUE(up.gradients.weights[l].isApprox(-down.gradients.weights[l]) || down.gradients.weights[l].isZero());
    EXPECT_TRUE(up.gradients.biases[l].isApprox(-down.gradients.biases[l]) || down.gradients.biases[l].isZero());
  }
}

TEST_F(AttackFixture, SuccessAtFinalEpochNotBelowFirstForMostSeeds) {
  std::size_t monotone = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    GeneratorTrainOptions o;
    o.epochs = 8;
    o.seed = seed;
    const auto g = train_generator(Generator(data.schema(), {{16}, 0.4, seed}), *sub, data, AttackMode::misidentify(), o);
    const auto& c = g.training_curve();
    monotone += c.back() >= c.front();
  }
  EXPECT_GE(monotone, 95u);
}
