#pragma once

// Private JSON helpers shared by model serialization code.

#include <json.hpp>

#include <Eigen/Core>

#include "iotgan/learners/mlp.hpp"
#include "iotgan/schema.hpp"

namespace iotgan::detail {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const json& j);
json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const json& j);

json schema_to_json(const FeatureSchema& s);
FeatureSchema schema_from_json(const json& j);

json mlp_to_json(const learners::Mlp& m);
learners::Mlp mlp_from_json(const json& j);

}  // namespace iotgan::detail
