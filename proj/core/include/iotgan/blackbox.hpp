#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "iotgan/dataset.hpp"
#include "iotgan/schema.hpp"

namespace iotgan::learners {
class Classifier;
}

namespace iotgan::blackbox {

/// Feature vectors over the attacker's pool, labelled only through oracle queries.
struct EavesdropCorpus {
  Dataset data;
  /// Oracle-labelled perturbations of data rows; probe_origin[i] is the row probe i was drawn around.
  std::vector<Sample> probes;
  std::vector<std::size_t> probe_origin;

  const FeatureSchema& schema() const noexcept { return data.schema(); }
  std::size_t size() const noexcept { return data.size(); }
};

/// Label-only view of a deployed identifier. Callers speak the attacker's
/// feature-pool schema; the oracle projects onto the hidden model's own
/// features internally. Nothing about the model (kind, parameters, scores)
/// is reachable through this type.
class Oracle {
 public:
  /// Throws ValidationError if the target uses a feature missing from `pool`.
  Oracle(std::shared_ptr<const learners::Classifier> target, FeatureSchema pool);

  Oracle(const Oracle&) = delete;
  Oracle& operator=(const Oracle&) = delete;

  /// Target's label for x. Safe for concurrent callers.
  DeviceClass query(const FeatureVector& x) const;

  /// One labelled row per input vector. Throws ValidationError on empty input.
  EavesdropCorpus collect(std::span<const FeatureVector> traffic) const;

  std::size_t query_log() const noexcept { return queries_.load(std::memory_order_relaxed); }

 private:
  std::shared_ptr<const learners::Classifier> target_;
  FeatureSchema pool_;
  std::vector<std::size_t> projection_;
  mutable std::atomic<std::size_t> queries_{0};
};

/// Queries `copies` perturbed variants of every corpus row and appends them
/// as probes. Each mutable feature moves uniformly by up to `radius` of its
/// width, clamped to range; immutable features are kept. Throws
/// ValidationError when radius is outside [0, 1].
void add_probes(const Oracle& oracle, EavesdropCorpus& corpus, std::size_t copies, double radius, std::uint64_t seed);

}  // namespace iotgan::blackbox
