#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "iotgan/dataset.hpp"
#include "iotgan/random.hpp"

namespace testing_support {

inline iotgan::FeatureSchema unit_schema(std::size_t k, std::size_t immutable = 0) {
  std::vector<iotgan::FeatureSpec> specs;
  for (std::size_t i = 0; i < k; ++i) specs.push_back({"f" + std::to_string(i), "", 0.0, 1.0, i >= immutable});
  return iotgan::FeatureSchema(std::move(specs));
}

/// Well separated Gaussian blobs in [0, 1]^k.
inline iotgan::Dataset blobs(std::size_t classes, std::size_t per_class, std::size_t k, std::uint64_t seed,
                             std::size_t immutable = 0) {
  iotgan::Rng rng(seed);
  std::uniform_real_distribution<double> centre(0.2, 0.8);
  std::normal_distribution<double> noise(0.0, 0.03);
  std::vector<std::string> names;
  std::vector<iotgan::Sample> rows;
  for (std::size_t c = 0; c < classes; ++c) {
    names.push_back("class_" + std::to_string(c));
    std::vector<double> mu(k);
    for (auto& m : mu) m = centre(rng);
    for (std::size_t i = 0; i < per_class; ++i) {
      iotgan::FeatureVector x{std::vector<double>(k)};
      for (std::size_t j = 0; j < k; ++j) x[j] = std::clamp(mu[j] + noise(rng), 0.0, 1.0);
      rows.push_back({std::move(x), c});
    }
  }
  return iotgan::Dataset(unit_schema(k, immutable), std::move(names), std::move(rows));
}

}  // namespace testing_support
