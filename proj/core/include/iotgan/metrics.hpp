#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "iotgan/dataset.hpp"

namespace iotgan {

/// N x N tally of (truth, prediction) pairs. Row = truth, column = prediction.
class ConfusionCounts {
 public:
  explicit ConfusionCounts(std::size_t n_classes = 0);

  static ConfusionCounts tally(std::span<const ClassId> truth, std::span<const ClassId> predicted,
                               std::size_t n_classes);

  void add(ClassId truth, ClassId predicted);

  std::size_t n_classes() const noexcept { return n_; }
  std::size_t at(ClassId truth, ClassId predicted) const { return cells_[truth * n_ + predicted]; }
  std::size_t correct() const noexcept;
  std::size_t total() const noexcept { return total_; }

 private:
  std::size_t n_;
  std::vector<std::size_t> cells_;
  std::size_t total_ = 0;
};

/// correct / total. Throws EmptyEvaluationError when total is zero.
double identification_rate(const ConfusionCounts& counts);

/// Fraction of predictions equal to `target`. Throws EmptyEvaluationError on an empty list.
double spoofing_rate(std::span<const ClassId> predictions, ClassId target);

}  // namespace iotgan
