#include "iotgan/metrics.hpp"

#include <algorithm>

#include <fmt/core.h>

#include "iotgan/error.hpp"

namespace iotgan {

ConfusionCounts::ConfusionCounts(std::size_t n_classes) : n_(n_classes), cells_(n_classes * n_classes, 0) {}

ConfusionCounts ConfusionCounts::tally(std::span<const ClassId> truth, std::span<const ClassId> predicted,
                                       std::size_t n_classes) {
  if (truth.size() != predicted.size())
    throw ValidationError(
        fmt::format("{} truths vs {} predictions", truth.size(), predicted.size()));
  ConfusionCounts c(n_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) c.add(truth[i], predicted[i]);
  return c;
}

void ConfusionCounts::add(ClassId truth, ClassId predicted) {
  if (truth >= n_ || predicted >= n_)
    throw ValidationError(fmt::format("class id pair ({}, {}) outside {} classes", truth, predicted, n_));
  ++cells_[truth * n_ + predicted];
  ++total_;
}

std::size_t ConfusionCounts::correct() const noexcept {
  std::size_t diag = 0;
  for (std::size_t c = 0; c < n_; ++c) diag += cells_[c * n_ + c];
  return diag;
}

double identification_rate(const ConfusionCounts& counts) {
  if (counts.total() == 0) throw EmptyEvaluationError("identification rate over zero observations");
  return static_cast<double>(counts.correct()) / static_cast<double>(counts.total());
}

double spoofing_rate(std::span<const ClassId> predictions, ClassId target) {
  if (predictions.empty()) throw EmptyEvaluationError("spoofing rate over zero predictions");
  const auto hits = std::count(predictions.begin(), predictions.end(), target);
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

}  // namespace iotgan
