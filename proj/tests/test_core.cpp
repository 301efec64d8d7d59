#include <set>

#include <gtest/gtest.h>

#include "iotgan/csv.hpp"
#include "iotgan/error.hpp"
#include "iotgan/metrics.hpp"
#include "iotgan/random.hpp"
#include "iotgan/synthetic.hpp"
#include "test_support.hpp"

using namespace iotgan;

TEST(Schema, RejectsDuplicatesAndInvertedRanges) {
  EXPECT_THROW(FeatureSchema({{"a", "", 0, 1, true}, {"a", "", 0, 1, true}}), ValidationError);
  EXPECT_THROW(FeatureSchema({{"a", "", 2, 1, true}}), ValidationError);
  EXPECT_THROW(FeatureSchema(std::vector<FeatureSpec>{}), ValidationError);
  EXPECT_THROW(FeatureSchema({{"a", "", 0, 1, false}}), ValidationError);
}

TEST(Schema, NormalizeRoundTrip) {
  const FeatureSchema s({{"a", "s", -2, 6, true}, {"b", "", 3, 3, true}});
  EXPECT_DOUBLE_EQ(s.normalize(0, 2.0), 0.5);
  EXPECT_DOUBLE_EQ(s.denormalize(0, 0.25), 0.0);
  EXPECT_DOUBLE_EQ(s.normalize(1, 3.0), 0.0);
  EXPECT_FALSE(s.contains(FeatureVector{{7.0, 3.0}}));
  EXPECT_THROW(s.check(FeatureVector{{0.0}}), ValidationError);
}

TEST(Schema, SubsetAndIndices) {
  const auto s = testing_support::unit_schema(5);
  const std::vector<std::size_t> pick{3, 1};
  const auto sub = s.subset(pick);
  EXPECT_EQ(sub[0].name, "f3");
  EXPECT_EQ(s.indices_of(sub), pick);
}

TEST(Metrics, IdentificationRateCounts) {
  ConfusionCounts c(2);
  for (int i = 0; i < 9762; ++i) c.add(0, 0);
  for (int i = 0; i < 238; ++i) c.add(0, 1);
  EXPECT_DOUBLE_EQ(identification_rate(c), 0.9762);
  EXPECT_THROW(identification_rate(ConfusionCounts(3)), EmptyEvaluationError);
}

TEST(Metrics, SpoofingRateCounts) {
  std::vector<ClassId> p(10000, 1);
  std::fill(p.begin(), p.begin() + 9211, 4);
  EXPECT_DOUBLE_EQ(spoofing_rate(p, 4), 0.9211);
  EXPECT_THROW(spoofing_rate({}, 0), EmptyEvaluationError);
}

TEST(Split, StratifiedProportionsAndCounts) {
  const auto ds = testing_support::blobs(7, 23, 3, 4);
  const auto [train, test] = split_dataset(ds, 0.8, 99);
  EXPECT_EQ(train.size() + test.size(), ds.size());
  EXPECT_EQ(train.size(), static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(ds.size()))));
  const auto h = train.class_histogram();
  for (auto n : h) EXPECT_LE(std::abs(static_cast<double>(n) - 0.8 * 23), 1.0);
  for (auto n : test.class_histogram()) EXPECT_GT(n, 0u);
}

TEST(Split, DeterministicForSeed) {
  const auto ds = testing_support::blobs(3, 20, 2, 4);
  EXPECT_EQ(split_dataset(ds, 0.8, 5).first.rows(), split_dataset(ds, 0.8, 5).first.rows());
  EXPECT_NE(split_dataset(ds, 0.8, 5).first.rows(), split_dataset(ds, 0.8, 6).first.rows());
}

TEST(Split, SingletonClassFails) {
  const auto ds = testing_support::blobs(2, 1, 2, 4);
  EXPECT_THROW(split_dataset(ds, 0.8, 1), StratificationError);
}

TEST(Random, DerivedSeedsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 50; ++a)
    for (std::uint64_t b = 0; b < 50; ++b) seen.insert(derive_seed(42, {a, b}));
  EXPECT_EQ(seen.size(), 2500u);
  EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
}

TEST(Csv, DatasetRoundTripIsExact) {
  const auto ds = testing_support::blobs(3, 10, 4, 8);
  const auto back = harness::parse_dataset_csv(harness::dataset_to_csv(ds), ds.schema(), ds.class_names());
  EXPECT_EQ(back.rows(), ds.rows());
}

TEST(Csv, ParseErrorsCarryPosition) {
  const auto s = testing_support::unit_schema(2);
  try {
    harness::parse_dataset_csv("f_f0,f_f1,class\n0.1,0.2,a\n0.3,abc,b\n", s, std::nullopt);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 2u);
  }
  EXPECT_THROW(harness::parse_dataset_csv("f_f0,f_f1,class\n0.1,1.5,a\n", s, std::nullopt), ParseError);
  EXPECT_THROW(harness::parse_dataset_csv("", s, std::nullopt), ParseError);
  EXPECT_THROW(harness::parse_dataset_csv("x,f_f1,class\n", s, std::nullopt), ParseError);
  EXPECT_THROW(harness::parse_dataset_csv("f_f0,f_f1,class\n0.1,0.2,zz\n", s, std::vector<std::string>{"a"}),
               ValidationError);
}

TEST(Csv, SchemaRoundTrip) {
  const auto s = harness::default_schema();
  EXPECT_EQ(harness::parse_schema_csv(harness::schema_to_csv(s)), s);
}

TEST(Synthetic, DefaultSchemaShape) {
  const auto s = harness::default_schema();
  EXPECT_EQ(s.size(), 24u);
  EXPECT_EQ(s.size() - s.mutable_count(), 11u);
  for (const auto& name : harness::default_target_features()) EXPECT_TRUE(s.index_of(name).has_value()) << name;
}

TEST(Synthetic, GeneratedRowsRespectSchemaAndOneHot) {
  const auto s = harness::default_schema();
  const auto profiles = harness::default_profiles(s, 42);
  EXPECT_EQ(profiles.size(), 28u);
  EXPECT_TRUE(harness::inseparable_pairs(profiles).empty());
  const auto ds = harness::generate_dataset(s, profiles, 20, 42);
  EXPECT_EQ(ds.size(), 28u * 20);
  for (const auto& r : ds.rows()) {
    EXPECT_TRUE(s.contains(r.x));
    for (const auto& group : profiles[r.label].one_hot) {
      double sum = 0.0;
      for (auto c : group.columns) sum += s.normalize(c, r.x[c]);
      EXPECT_DOUBLE_EQ(sum, 1.0);
    }
  }
}

TEST(Synthetic, DeviceTypesFromLabels) {
  EXPECT_EQ(harness::device_type_of("camera_03"), harness::DeviceType::Camera);
  EXPECT_EQ(harness::parse_device_type("health"), harness::DeviceType::Health);
  EXPECT_THROW(harness::parse_device_type("toaster"), ValidationError);
}
