#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "iotgan/dataset.hpp"
#include "iotgan/learners/decision_tree.hpp"
#include "iotgan/learners/knn.hpp"
#include "iotgan/learners/linear_svm.hpp"
#include "iotgan/learners/mlp.hpp"
#include "iotgan/learners/random_forest.hpp"
#include "iotgan/schema.hpp"

namespace iotgan::learners {

enum class ClassifierKind { Knn, DecisionTree, RandomForest, Svm, NeuralNet };

inline constexpr ClassifierKind kAllKinds[] = {ClassifierKind::RandomForest, ClassifierKind::DecisionTree,
                                               ClassifierKind::Svm, ClassifierKind::Knn,
                                               ClassifierKind::NeuralNet};

/// "knn", "decision_tree", "random_forest", "svm", "neural_net"
std::string_view to_string(ClassifierKind kind) noexcept;
/// Row label used in report tables, e.g. "Random Forest".
std::string_view display_name(ClassifierKind kind) noexcept;
ClassifierKind parse_kind(std::string_view name);

struct Hyperparams {
  std::size_t knn_k = 5;
  std::size_t tree_max_depth = 0;  // 0: unbounded
  std::size_t tree_min_samples_split = 2;
  std::size_t forest_trees = 50;
  std::size_t forest_max_features = 0;  // 0: ceil(sqrt(K))
  double svm_lambda = 1e-4;
  std::size_t svm_epochs = 30;
  std::vector<std::size_t> mlp_hidden{64, 64};
  std::size_t mlp_epochs = 40;
  std::size_t mlp_batch = 32;
  double mlp_learning_rate = 1e-3;
  std::uint64_t seed = 0;

  /// Throws ValidationError when a field is invalid for `kind`.
  void validate(ClassifierKind kind) const;
};

/// A trained identifier over a fixed schema. Inputs are range-checked and
/// normalized by the schema before reaching the underlying model.
class Classifier {
 public:
  using Model = std::variant<KnnModel, DecisionTree, RandomForest, LinearSvm, Mlp>;

  Classifier() = default;
  /// Wraps an already-trained model; the kind follows from the variant.
  Classifier(FeatureSchema schema, std::vector<std::string> class_names, Model model);

  ClassifierKind kind() const noexcept;
  const FeatureSchema& schema() const noexcept { return schema_; }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }
  std::size_t n_classes() const noexcept { return class_names_.size(); }
  const Model& model() const noexcept { return model_; }

  /// Scores for an already-normalized row; no validation.
  std::vector<double> scores_normalized(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

  friend bool operator==(const Classifier&, const Classifier&) = default;

 private:
  FeatureSchema schema_;
  std::vector<std::string> class_names_;
  Model model_;
};

/// Trains `kind` on `train`. Deterministic for a fixed hyperparams.seed.
/// Throws DegenerateTrainingError on single-class data, ValidationError on
/// empty data or invalid hyperparameters.
Classifier fit(ClassifierKind kind, const Dataset& train, const Hyperparams& hp);

/// Class with the largest score, lowest id on ties.
ClassId predict(const Classifier& model, const FeatureVector& x);
std::vector<double> predict_scores(const Classifier& model, const FeatureVector& x);
std::vector<ClassId> predict_all(const Classifier& model, std::span<const FeatureVector> xs);
std::vector<ClassId> predict_all(const Classifier& model, const Dataset& ds);

/// Versioned JSON document; doubles are written with round-trip precision.
void save_classifier(const Classifier& model, std::ostream& out);
Classifier load_classifier(std::istream& in);
void save_classifier(const Classifier& model, const std::filesystem::path& path);
Classifier load_classifier(const std::filesystem::path& path);

}  // namespace iotgan::learners
