#include "json_io.hpp"

#include "iotgan/error.hpp"

namespace iotgan::detail {

json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size())
    throw ValidationError("matrix payload does not match its shape");
  Eigen::MatrixXd m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[i++];
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from_json(const json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(data.data(), static_cast<Eigen::Index>(data.size()));
}

json schema_to_json(const FeatureSchema& s) {
  json out = json::array();
  for (const auto& f : s.features())
    out.push_back({{"name", f.name}, {"unit", f.unit}, {"min", f.min}, {"max", f.max}, {"mutable", f.is_mutable}});
  return out;
}

FeatureSchema schema_from_json(const json& j) {
  std::vector<FeatureSpec> specs;
  for (const auto& f : j)
    specs.push_back(FeatureSpec{f.at("name").get<std::string>(), f.at("unit").get<std::string>(),
                                f.at("min").get<double>(), f.at("max").get<double>(), f.at("mutable").get<bool>()});
  return FeatureSchema(std::move(specs));
}

json mlp_to_json(const learners::Mlp& m) {
  json layers = json::array();
  for (std::size_t l = 0; l < m.layer_count(); ++l)
    layers.push_back({{"weights", matrix_to_json(m.weights(l))}, {"bias", vector_to_json(m.bias(l))}});
  return {{"sizes", m.layer_sizes()},
          {"output", m.output_activation() == learners::OutputActivation::Sigmoid ? "sigmoid" : "identity"},
          {"layers", layers}};
}

learners::Mlp mlp_from_json(const json& j) {
  const auto sizes = j.at("sizes").get<std::vector<std::size_t>>();
  const auto out = j.at("output").get<std::string>() == "sigmoid" ? learners::OutputActivation::Sigmoid
                                                                   : learners::OutputActivation::Identity;
  auto m = learners::Mlp::zeros(sizes, out);
  const auto& layers = j.at("layers");
  if (layers.size() != m.layer_count()) throw ValidationError("MLP layer count does not match its sizes");
  for (std::size_t l = 0; l < m.layer_count(); ++l) {
    auto w = matrix_from_json(layers[l].at("weights"));
    auto b = vector_from_json(layers[l].at("bias"));
    if (w.rows() != m.weights(l).rows() || w.cols() != m.weights(l).cols() || b.size() != m.bias(l).size())
      throw ValidationError("MLP layer shape does not match its sizes");
    m.weights(l) = std::move(w);
    m.bias(l) = std::move(b);
  }
  return m;
}

}  // namespace iotgan::detail
