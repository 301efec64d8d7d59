#include "iotgan/learners/classifier.hpp"

#include <fstream>
#include <sstream>

#include <fmt/core.h>

#include "iotgan/error.hpp"
#include "iotgan/io.hpp"
#include "json_io.hpp"

namespace iotgan::learners {

namespace {

constexpr std::string_view kFormat = "iotgan-classifier";
constexpr int kVersion = 1;

Eigen::RowVectorXd normalized_row(const FeatureSchema& schema, const FeatureVector& x) {
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) row(static_cast<Eigen::Index>(i)) = schema.normalize(i, x[i]);
  return row;
}

}  // namespace

std::string_view to_string(ClassifierKind kind) noexcept {
  switch (kind) {
    case ClassifierKind::Knn: return "knn";
    case ClassifierKind::DecisionTree: return "decision_tree";
    case ClassifierKind::RandomForest: return "random_forest";
    case ClassifierKind::Svm: return "svm";
    case ClassifierKind::NeuralNet: return "neural_net";
  }
  return "unknown";
}

std::string_view display_name(ClassifierKind kind) noexcept {
  switch (kind) {
    case ClassifierKind::Knn: return "k-NN";
    case ClassifierKind::DecisionTree: return "Decision Tree";
    case ClassifierKind::RandomForest: return "Random Forest";
    case ClassifierKind::Svm: return "SVM";
    case ClassifierKind::NeuralNet: return "Neural Networks";
  }
  return "unknown";
}

ClassifierKind parse_kind(std::string_view name) {
  for (auto k : kAllKinds)
    if (to_string(k) == name) return k;
  throw ValidationError(fmt::format("unknown classifier kind '{}'", name));
}

void Hyperparams::validate(ClassifierKind kind) const {
  switch (kind) {
    case ClassifierKind::Knn:
      if (knn_k < 1) throw ValidationError("k-NN needs k >= 1");
      break;
    case ClassifierKind::DecisionTree:
      if (tree_min_samples_split < 2) throw ValidationError("min_samples_split must be >= 2");
      break;
    case ClassifierKind::RandomForest:
      if (forest_trees < 1) throw ValidationError("forest size must be >= 1");
      break;
    case ClassifierKind::Svm:
      if (!(svm_lambda > 0.0)) throw ValidationError("SVM regularisation must be > 0");
      if (svm_epochs < 1) throw ValidationError("SVM needs at least one epoch");
      break;
    case ClassifierKind::NeuralNet:
      if (mlp_hidden.empty()) throw ValidationError("MLP needs at least one hidden layer");
      for (auto h : mlp_hidden)
        if (h == 0) throw ValidationError("MLP hidden layers must be non-empty");
      if (mlp_epochs < 1 || mlp_batch < 1) throw ValidationError("MLP epochs and batch size must be >= 1");
      if (!(mlp_learning_rate > 0.0)) throw ValidationError("MLP learning rate must be > 0");
      break;
  }
}

Classifier::Classifier(FeatureSchema schema, std::vector<std::string> class_names, Model model)
    : schema_(std::move(schema)), class_names_(std::move(class_names)), model_(std::move(model)) {
  const std::size_t n = std::visit(
      [](const auto& m) -> std::size_t {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Mlp>)
          return m.output_size();
        else
          return m.n_classes();
      },
      model_);
  if (n != class_names_.size())
    throw ValidationError(fmt::format("model scores {} classes but {} class names were given", n,
                                      class_names_.size()));
}

ClassifierKind Classifier::kind() const noexcept { return static_cast<ClassifierKind>(model_.index()); }

std::vector<double> Classifier::scores_normalized(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return std::visit(
      [&](const auto& m) -> std::vector<double> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DecisionTree>) {
          return m.scores(x);
        } else if constexpr (std::is_same_v<T, Mlp>) {
          Eigen::VectorXd s = m.forward(Eigen::VectorXd(x.transpose()));
          return {s.data(), s.data() + s.size()};
        } else {
          return m.scores(x);
        }
      },
      model_);
}

Classifier fit(ClassifierKind kind, const Dataset& train, const Hyperparams& hp) {
  hp.validate(kind);
  if (train.empty()) throw ValidationError("cannot fit on an empty dataset");
  if (train.distinct_labels() < 2)
    throw DegenerateTrainingError("training data contains a single class");

  const Eigen::MatrixXd x = train.normalized_matrix();
  const auto y = train.labels();
  const std::size_t n = train.n_classes();
  Classifier::Model model;
  switch (kind) {
    case ClassifierKind::Knn:
      model = KnnModel(x, y, n, hp.knn_k);
      break;
    case ClassifierKind::DecisionTree: {
      TreeParams tp;
      tp.max_depth = hp.tree_max_depth;
      tp.min_samples_split = hp.tree_min_samples_split;
      model = DecisionTree::fit(x, y, n, tp);
      break;
    }
    case ClassifierKind::RandomForest: {
      ForestParams fp;
      fp.n_trees = hp.forest_trees;
      fp.max_depth = hp.tree_max_depth;
      fp.max_features = hp.forest_max_features;
      model = RandomForest::fit(x, y, n, fp, hp.seed);
      break;
    }
    case ClassifierKind::Svm:
      model = LinearSvm::fit(x, y, n, SvmParams{hp.svm_lambda, hp.svm_epochs}, hp.seed);
      break;
    case ClassifierKind::NeuralNet: {
      std::vector<std::size_t> sizes{train.schema().size()};
      sizes.insert(sizes.end(), hp.mlp_hidden.begin(), hp.mlp_hidden.end());
      sizes.push_back(n);
      Mlp net(sizes, derive_seed(hp.seed, {1}));
      MlpTrainOptions opt;
      opt.epochs = hp.mlp_epochs;
      opt.batch_size = hp.mlp_batch;
      opt.learning_rate = hp.mlp_learning_rate;
      opt.seed = derive_seed(hp.seed, {2});
      train_mlp(net, x, one_hot(y, n), opt);
      model = std::move(net);
      break;
    }
  }
  return Classifier(train.schema(), train.class_names(), std::move(model));
}

std::vector<double> predict_scores(const Classifier& model, const FeatureVector& x) {
  model.schema().check(x);
  return model.scores_normalized(normalized_row(model.schema(), x));
}

ClassId predict(const Classifier& model, const FeatureVector& x) {
  return argmax_lowest(predict_scores(model, x));
}

std::vector<ClassId> predict_all(const Classifier& model, std::span<const FeatureVector> xs) {
  std::vector<ClassId> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(predict(model, x));
  return out;
}

std::vector<ClassId> predict_all(const Classifier& model, const Dataset& ds) {
  std::vector<ClassId> out;
  out.reserve(ds.size());
  for (const auto& s : ds.rows()) out.push_back(predict(model, s.x));
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using detail::json;

json tree_to_json(const DecisionTree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes()) {
    if (n.is_leaf())
      nodes.push_back({{"leaf", n.class_freq}});
    else
      nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
  }
  return {{"n_classes", t.n_classes()}, {"n_features", t.n_features()}, {"nodes", nodes}};
}

DecisionTree tree_from_json(const json& j) {
  std::vector<TreeNode> nodes;
  for (const auto& n : j.at("nodes")) {
    TreeNode node;
    if (n.contains("leaf")) {
      node.class_freq = n.at("leaf").get<std::vector<double>>();
    } else {
      node.feature = n.at("feature").get<int>();
      node.threshold = n.at("threshold").get<double>();
      node.left = n.at("left").get<int>();
      node.right = n.at("right").get<int>();
    }
    nodes.push_back(std::move(node));
  }
  return DecisionTree(j.at("n_classes").get<std::size_t>(), j.at("n_features").get<std::size_t>(),
                      std::move(nodes));
}

json model_to_json(const Classifier::Model& model) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, KnnModel>) {
          return {{"k", m.k()},
                  {"n_classes", m.n_classes()},
                  {"train", detail::matrix_to_json(m.train())},
                  {"labels", m.labels()}};
        } else if constexpr (std::is_same_v<T, DecisionTree>) {
          return tree_to_json(m);
        } else if constexpr (std::is_same_v<T, RandomForest>) {
          json trees = json::array();
          for (const auto& t : m.trees()) trees.push_back(tree_to_json(t));
          return {{"n_classes", m.n_classes()}, {"trees", trees}};
        } else if constexpr (std::is_same_v<T, LinearSvm>) {
          return {{"weights", detail::matrix_to_json(m.weights())}, {"bias", detail::vector_to_json(m.bias())}};
        } else {
          return detail::mlp_to_json(m);
        }
      },
      model);
}

Classifier::Model model_from_json(ClassifierKind kind, const json& j) {
  switch (kind) {
    case ClassifierKind::Knn:
      return KnnModel(detail::matrix_from_json(j.at("train")), j.at("labels").get<std::vector<ClassId>>(),
                      j.at("n_classes").get<std::size_t>(), j.at("k").get<std::size_t>());
    case ClassifierKind::DecisionTree:
      return tree_from_json(j);
    case ClassifierKind::RandomForest: {
      std::vector<DecisionTree> trees;
      for (const auto& t : j.at("trees")) trees.push_back(tree_from_json(t));
      return RandomForest(j.at("n_classes").get<std::size_t>(), std::move(trees));
    }
    case ClassifierKind::Svm:
      return LinearSvm(detail::matrix_from_json(j.at("weights")), detail::vector_from_json(j.at("bias")));
    case ClassifierKind::NeuralNet:
      return detail::mlp_from_json(j);
  }
  throw ValidationError("unknown classifier kind");
}

}  // namespace

void save_classifier(const Classifier& model, std::ostream& out) {
  json doc = {{"format", kFormat},
              {"version", kVersion},
              {"kind", to_string(model.kind())},
              {"schema", detail::schema_to_json(model.schema())},
              {"classes", model.class_names()},
              {"model", model_to_json(model.model())}};
  out << doc.dump() << '\n';
  if (!out) throw IoError("failed to write classifier");
}

Classifier load_classifier(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("classifier document is not valid JSON: {}", e.what()), 0);
  }
  try {
    if (doc.at("format").get<std::string>() != kFormat) throw ValidationError("not a classifier document");
    if (doc.at("version").get<int>() != kVersion)
      throw ValidationError(fmt::format("unsupported classifier version {}", doc.at("version").get<int>()));
    const auto kind = parse_kind(doc.at("kind").get<std::string>());
    return Classifier(detail::schema_from_json(doc.at("schema")),
                      doc.at("classes").get<std::vector<std::string>>(), model_from_json(kind, doc.at("model")));
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("malformed classifier document: {}", e.what()));
  }
}

void save_classifier(const Classifier& model, const std::filesystem::path& path) {
  std::ostringstream out;
  save_classifier(model, out);
  write_file_atomic(path, out.str());
}

Classifier load_classifier(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  return load_classifier(in);
}

}  // namespace iotgan::learners
