#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace iotgan {

/// One column of the feature space.
struct FeatureSpec {
  std::string name;
  std::string unit;
  double min = 0.0;
  double max = 1.0;
  /// False when changing the value could break the device's function
  /// (payload semantics, protocol, cipher). Such coordinates are never perturbed.
  bool is_mutable = true;

  double width() const noexcept { return max - min; }
  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

/// Dense numeric observation aligned to a FeatureSchema.
struct FeatureVector {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Ordered, validated list of features. Immutable after construction.
class FeatureSchema {
 public:
  FeatureSchema() = default;

  /// Throws ValidationError on duplicate names, min > max, an empty list,
  /// or no mutable feature at all.
  explicit FeatureSchema(std::vector<FeatureSpec> features);

  std::size_t size() const noexcept { return features_.size(); }
  bool empty() const noexcept { return features_.empty(); }
  std::span<const FeatureSpec> features() const noexcept { return features_; }
  const FeatureSpec& operator[](std::size_t i) const { return features_[i]; }

  std::optional<std::size_t> index_of(std::string_view name) const;

  /// Positions of every feature of `other` inside this schema, by name.
  /// Throws ValidationError if `other` names a feature this schema lacks.
  std::vector<std::size_t> indices_of(const FeatureSchema& other) const;

  /// Schema restricted to `indices`, preserving the given order.
  FeatureSchema subset(std::span<const std::size_t> indices) const;

  std::vector<bool> mutable_mask() const;
  std::size_t mutable_count() const noexcept;

  bool contains(const FeatureVector& x) const noexcept;
  /// Throws ValidationError naming the first offending coordinate.
  void check(const FeatureVector& x) const;

  /// Maps feature i linearly onto [0, 1]; zero-width features map to 0.
  double normalize(std::size_t i, double v) const noexcept;
  double denormalize(std::size_t i, double u) const noexcept;
  std::vector<double> normalized(const FeatureVector& x) const;

  /// Projects x (aligned to this schema) onto `indices`.
  static FeatureVector project(const FeatureVector& x, std::span<const std::size_t> indices);

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;

 private:
  std::vector<FeatureSpec> features_;
};

}  // namespace iotgan
