#include "iotgan/schema.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <fmt/core.h>

#include "iotgan/error.hpp"

namespace iotgan {

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> features) : features_(std::move(features)) {
  if (features_.empty()) throw ValidationError("feature schema is empty");
  std::unordered_set<std::string> seen;
  bool any_mutable = false;
  for (const auto& f : features_) {
    if (f.name.empty()) throw ValidationError("feature schema contains an unnamed feature");
    if (!seen.insert(f.name).second)
      throw ValidationError(fmt::format("duplicate feature name '{}'", f.name));
    if (!(f.min <= f.max) || !std::isfinite(f.min) || !std::isfinite(f.max))
      throw ValidationError(fmt::format("feature '{}' has invalid range [{}, {}]", f.name, f.min, f.max));
    any_mutable = any_mutable || f.is_mutable;
  }
  if (!any_mutable) throw ValidationError("feature schema has no mutable feature");
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < features_.size(); ++i)
    if (features_[i].name == name) return i;
  return std::nullopt;
}

std::vector<std::size_t> FeatureSchema::indices_of(const FeatureSchema& other) const {
  std::vector<std::size_t> out;
  out.reserve(other.size());
  for (const auto& f : other.features()) {
    auto idx = index_of(f.name);
    if (!idx) throw ValidationError(fmt::format("feature '{}' is not part of the schema", f.name));
    out.push_back(*idx);
  }
  return out;
}

FeatureSchema FeatureSchema::subset(std::span<const std::size_t> indices) const {
  std::vector<FeatureSpec> picked;
  picked.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= features_.size()) throw ValidationError(fmt::format("feature index {} out of range", i));
    picked.push_back(features_[i]);
  }
  return FeatureSchema(std::move(picked));
}

std::vector<bool> FeatureSchema::mutable_mask() const {
  std::vector<bool> mask(features_.size());
  for (std::size_t i = 0; i < features_.size(); ++i) mask[i] = features_[i].is_mutable;
  return mask;
}

std::size_t FeatureSchema::mutable_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(features_.begin(), features_.end(), [](const auto& f) { return f.is_mutable; }));
}

bool FeatureSchema::contains(const FeatureVector& x) const noexcept {
  if (x.size() != features_.size()) return false;
  for (std::size_t i = 0; i < features_.size(); ++i) {
    // Negated comparisons so NaN is rejected.
    if (!(x[i] >= features_[i].min) || !(x[i] <= features_[i].max)) return false;
  }
  return true;
}

void FeatureSchema::check(const FeatureVector& x) const {
  if (x.size() != features_.size())
    throw ValidationError(
        fmt::format("vector has {} values, schema expects {}", x.size(), features_.size()));
  for (std::size_t i = 0; i < features_.size(); ++i) {
    const auto& f = features_[i];
    if (!(x[i] >= f.min) || !(x[i] <= f.max))
      throw ValidationError(
          fmt::format("feature '{}' = {} outside [{}, {}]", f.name, x[i], f.min, f.max));
  }
}

double FeatureSchema::normalize(std::size_t i, double v) const noexcept {
  const auto& f = features_[i];
  const double w = f.width();
  return w > 0.0 ? (v - f.min) / w : 0.0;
}

double FeatureSchema::denormalize(std::size_t i, double u) const noexcept {
  const auto& f = features_[i];
  return std::clamp(f.min + u * f.width(), f.min, f.max);
}

std::vector<double> FeatureSchema::normalized(const FeatureVector& x) const {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = normalize(i, x[i]);
  return out;
}

FeatureVector FeatureSchema::project(const FeatureVector& x, std::span<const std::size_t> indices) {
  FeatureVector out;
  out.values.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= x.size()) throw ValidationError(fmt::format("projection index {} out of range", i));
    out.values.push_back(x[i]);
  }
  return out;
}

}  // namespace iotgan
