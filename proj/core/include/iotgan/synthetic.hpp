#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "iotgan/dataset.hpp"
#include "iotgan/schema.hpp"

namespace iotgan::harness {

enum class DeviceType { Camera, Hub, Switch, Health };

inline constexpr std::array<DeviceType, 4> kDeviceTypes = {DeviceType::Camera, DeviceType::Hub, DeviceType::Switch,
                                                           DeviceType::Health};

/// "camera", "hub", "switch", "health"
std::string_view to_string(DeviceType t) noexcept;
DeviceType parse_device_type(std::string_view name);
/// Type encoded in a class label such as "hub_03". Throws ValidationError otherwise.
DeviceType device_type_of(std::string_view label);

/// 24 features: remote-service features followed by packet/flow features.
/// Service type, domain bucket, protocol and cipher are immutable.
FeatureSchema default_schema();

/// Features the deployed identifiers are trained on by default.
std::vector<std::string> default_target_features();

enum class Family { Normal, Uniform, Integer, OneHot };

/// Parameters in schema-normalized units. Normal: mean and standard deviation.
/// Uniform: centre and half-width. Integer: uniform over the whole physical
/// range. OneHot: the column belongs to a one-hot group (see SyntheticProfile).
struct FeatureDistribution {
  Family family = Family::Normal;
  double mean = 0.5;
  double spread = 0.0;
};

/// Mutually exclusive indicator columns; exactly one is set per row.
struct OneHotGroup {
  std::vector<std::size_t> columns;
  std::vector<double> weights;  // relative, one per column
};

struct SyntheticProfile {
  std::string label;
  DeviceType type = DeviceType::Camera;
  std::vector<FeatureDistribution> features;  // one per schema feature
  std::vector<OneHotGroup> one_hot;
};

struct SyntheticOptions {
  std::size_t n_classes = 28;
  double code_amplitude = 0.15;
  double class_spread = 0.02;
  double noise_spread = 0.04;
  double type_jitter = 0.02;
};

/// Device classes grouped by type in equal blocks, labelled "<type>_NN".
/// Devices of one type differ by a binary code on eight timing and size
/// columns (mean 0.5 +- code_amplitude); volume and bandwidth depend on the
/// type only.
std::vector<SyntheticProfile> default_profiles(const FeatureSchema& schema, std::uint64_t seed,
                                               const SyntheticOptions& options = {});

/// Pairs (a, b) with no Normal feature where |mean_a - mean_b| > 2 * max spread.
std::vector<std::pair<std::size_t, std::size_t>> inseparable_pairs(const std::vector<SyntheticProfile>& profiles);

using Warning = std::function<void(std::string_view)>;

/// rows_per_class seeded draws per profile, clamped to the schema ranges.
/// Inseparable profiles are reported through `warn`, not rejected.
/// Throws ValidationError for fewer than two profiles or malformed profiles.
Dataset generate_dataset(const FeatureSchema& schema, const std::vector<SyntheticProfile>& profiles,
                         std::size_t rows_per_class, std::uint64_t seed, const Warning& warn = {});

}  // namespace iotgan::harness
