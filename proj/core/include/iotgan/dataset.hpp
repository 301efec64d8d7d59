#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "iotgan/schema.hpp"

namespace iotgan {

using ClassId = std::size_t;

struct DeviceClass {
  ClassId id = 0;
  std::string label;
  friend bool operator==(const DeviceClass&, const DeviceClass&) = default;
};

struct Sample {
  FeatureVector x;
  ClassId label = 0;
  friend bool operator==(const Sample&, const Sample&) = default;
};

/// Labeled observations over one schema. `class_names` fixes N and the
/// id -> label mapping; ids present in rows must be < N.
class Dataset {
 public:
  Dataset() = default;
  /// Validates row widths, class ids and value ranges.
  Dataset(FeatureSchema schema, std::vector<std::string> class_names, std::vector<Sample> rows,
          std::uint64_t split_seed = 0);

  const FeatureSchema& schema() const noexcept { return schema_; }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }
  std::size_t n_classes() const noexcept { return class_names_.size(); }
  const std::vector<Sample>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }
  std::uint64_t split_seed() const noexcept { return split_seed_; }

  DeviceClass device_class(ClassId id) const;
  std::vector<std::size_t> class_histogram() const;
  std::size_t distinct_labels() const;

  /// Row-major matrix of schema-normalized features (rows x K).
  Eigen::MatrixXd normalized_matrix() const;
  std::vector<ClassId> labels() const;

  /// Same schema and classes, only the listed rows.
  Dataset select(const std::vector<std::size_t>& indices) const;
  /// Rows projected onto a subset of the schema's columns.
  Dataset project(const FeatureSchema& target_schema) const;

 private:
  FeatureSchema schema_;
  std::vector<std::string> class_names_;
  std::vector<Sample> rows_;
  std::uint64_t split_seed_ = 0;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Index-level stratified split behind split_dataset(). With
/// `singletons_to_train`, classes holding a single row go to the train side
/// instead of raising StratificationError.
SplitIndices stratified_split_indices(const std::vector<ClassId>& labels, std::size_t n_classes,
                                      double train_fraction, std::uint64_t seed,
                                      bool singletons_to_train = false);

/// Stratified, seeded split. Per class, floor/remainder allocation keeps each
/// class proportion within one row of `train_fraction` and the global train
/// count equal to round(train_fraction * n).
/// Throws StratificationError if any present class has fewer than 2 rows.
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double train_fraction, std::uint64_t seed);

}  // namespace iotgan
