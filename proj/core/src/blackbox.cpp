#include "iotgan/blackbox.hpp"

#include <algorithm>
#include <cmath>

#include "iotgan/error.hpp"
#include "iotgan/learners/classifier.hpp"
#include "iotgan/random.hpp"

namespace iotgan::blackbox {

Oracle::Oracle(std::shared_ptr<const learners::Classifier> target, FeatureSchema pool)
    : target_(std::move(target)), pool_(std::move(pool)) {
  if (!target_) throw ValidationError("oracle needs a target model");
  projection_ = pool_.indices_of(target_->schema());
}

DeviceClass Oracle::query(const FeatureVector& x) const {
  if (x.size() != pool_.size()) throw ValidationError("query vector does not match the feature pool");
  const auto label = learners::predict(*target_, FeatureSchema::project(x, projection_));
  queries_.fetch_add(1, std::memory_order_relaxed);
  return DeviceClass{label, target_->class_names()[label]};
}

EavesdropCorpus Oracle::collect(std::span<const FeatureVector> traffic) const {
  if (traffic.empty()) throw ValidationError("no traffic to collect");
  std::vector<Sample> rows;
  rows.reserve(traffic.size());
  for (const auto& x : traffic) rows.push_back(Sample{x, query(x).id});
  EavesdropCorpus corpus;
  corpus.data = Dataset(pool_, target_->class_names(), std::move(rows));
  return corpus;
}

void add_probes(const Oracle& oracle, EavesdropCorpus& corpus, std::size_t copies, double radius, std::uint64_t seed) {
  if (!(radius >= 0.0 && radius <= 1.0)) throw ValidationError("probe radius must be in [0, 1]");
  const auto& schema = corpus.schema();
  Rng rng(seed);
  std::uniform_real_distribution<double> step(-radius, radius);
  for (std::size_t c = 0; c < copies; ++c)
    for (std::size_t r = 0; r < corpus.size(); ++r) {
      FeatureVector x = corpus.data.rows()[r].x;
      for (std::size_t i = 0; i < schema.size(); ++i) {
        if (!schema[i].is_mutable) continue;
        x[i] = schema.denormalize(i, std::clamp(schema.normalize(i, x[i]) + step(rng), 0.0, 1.0));
      }
      const ClassId label = oracle.query(x).id;
      corpus.probes.push_back(Sample{std::move(x), label});
      corpus.probe_origin.push_back(r);
    }
}

}  // namespace iotgan::blackbox
