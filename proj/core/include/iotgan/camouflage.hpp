#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "iotgan/blackbox.hpp"
#include "iotgan/dataset.hpp"
#include "iotgan/learners/mlp.hpp"
#include "iotgan/schema.hpp"
#include "iotgan/substitute.hpp"

namespace iotgan::learners {
class Classifier;
}

namespace iotgan::camouflage {

inline constexpr double kMaxMultiplier = 0.1;

/// Per-feature noise scale; zero on immutable features.
struct MultiplierFactor {
  std::vector<double> r;
};

struct Noise {
  MultiplierFactor r;
  std::vector<double> s;  // r_i * h_i
};

/// r_i ~ U[0, 0.1] on mutable features, 0 elsewhere; s = r * h.
Noise make_noise(const FeatureVector& h, const FeatureSchema& schema, std::uint64_t seed);

struct AttackMode {
  enum class Kind { Misidentify, Spoof };
  Kind kind = Kind::Misidentify;
  ClassId target = 0;

  static AttackMode misidentify() noexcept { return {}; }
  static AttackMode spoof(ClassId target) noexcept { return {Kind::Spoof, target}; }
  bool is_spoof() const noexcept { return kind == Kind::Spoof; }
};

std::string to_string(const AttackMode& mode);

struct GeneratorOptions {
  std::vector<std::size_t> hidden{64, 64};
  /// Largest change per mutable feature, as a fraction of its range.
  double budget = 0.4;
  std::uint64_t seed = 0;
};

/// Residual manipulator over a feature pool:
///   u' = clamp(u + mask * budget * tanh(net([u, s_u])), 0, 1)
/// in schema-normalized units, after which immutable coordinates are copied
/// from the input unchanged. The net's last layer starts at zero, so an
/// untrained generator is the identity.
class Generator {
 public:
  Generator(FeatureSchema schema, const GeneratorOptions& options = {});
  Generator(FeatureSchema schema, learners::Mlp net, double budget);

  const FeatureSchema& schema() const noexcept { return schema_; }
  const learners::Mlp& net() const noexcept { return net_; }
  learners::Mlp& net() noexcept { return net_; }
  double budget() const noexcept { return budget_; }
  const std::vector<bool>& mask() const noexcept { return mask_; }

  /// Attack success on the substitute after each training epoch.
  const std::vector<double>& training_curve() const noexcept { return curve_; }
  std::vector<double>& training_curve() noexcept { return curve_; }

  struct Pass {
    learners::Mlp::Cache cache;
    Eigen::MatrixXd squashed;  // tanh of the net output
    Eigen::MatrixXd raw;       // u + mask * budget * squashed, before the clamp
    Eigen::MatrixXd out;       // clamped
  };
  /// Batched forward in normalized units: u and s_u are (rows x K).
  Eigen::MatrixXd forward_normalized(const Eigen::MatrixXd& u, const Eigen::MatrixXd& s_u,
                                     Pass* pass = nullptr) const;

 private:
  FeatureSchema schema_;
  learners::Mlp net_;
  double budget_ = 0.0;
  std::vector<bool> mask_;
  Eigen::RowVectorXd mask_row_;
  std::vector<double> curve_;
};

/// h' = G(h, s). Deterministic. Throws ValidationError on a range or width
/// mismatch, NumericError if the network produces a non-finite value.
FeatureVector manipulate(const Generator& g, const FeatureVector& h, std::span<const double> s);

/// manipulate() with fresh noise per row from derive_seed(seed, {row}).
std::vector<FeatureVector> manipulate_all(const Generator& g, std::span<const FeatureVector> rows,
                                          std::uint64_t seed);

struct GeneratorTrainOptions {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 0.001;  // Adam step size
  std::size_t plateau_window = 5;
  double plateau_tolerance = 1e-4;
  std::uint64_t seed = 0;
};

struct GeneratorStep {
  double loss = 0.0;  // mean softmax cross-entropy of the substitute on G(u)
  learners::MlpGradients gradients;
  Eigen::MatrixXd out;
};

/// Loss and parameter gradients for one normalized batch, through the frozen
/// substitute. With `ascend` the loss is negated, so a descent step raises the
/// cross-entropy. Where the clamp is active, gradient survives only if descent
/// would move the value back into range.
GeneratorStep generator_gradients(const Generator& g, const substitute::SubstituteModel& sub, const Eigen::MatrixXd& u,
                                  const Eigen::MatrixXd& s_u, const Eigen::MatrixXd& targets, bool ascend = false);

/// Called after each epoch (0-based) with the current generator.
using EpochObserver = std::function<void(std::size_t epoch, const Generator&)>;

/// Adam on the generator with the substitute frozen. Misidentify ascends the
/// substitute's softmax cross-entropy against its own labels for h; spoof
/// descends it toward the target class. Stops once success moves less than the plateau
/// tolerance over the plateau window. Throws ContractViolation for an
/// unfrozen substitute and ValidationError for bad options or a pool mismatch.
Generator train_generator(Generator g, const substitute::SubstituteModel& sub, const Dataset& train,
                          const AttackMode& mode, const GeneratorTrainOptions& options,
                          const EpochObserver& on_epoch = {});

/// Fraction of rows where the substitute's label for G(h) differs from its
/// label for h (misidentify) or equals the target (spoof).
double substitute_success(const Generator& g, const substitute::SubstituteModel& sub,
                          std::span<const FeatureVector> rows, const AttackMode& mode, std::uint64_t seed);

/// Any labeller over the generator's pool schema.
using Identifier = std::function<ClassId(const FeatureVector&)>;

Identifier identifier(const blackbox::Oracle& oracle);
Identifier identifier(const substitute::SubstituteModel& sub);
/// Projects pool vectors onto the classifier's own schema by feature name.
Identifier identifier(std::shared_ptr<const learners::Classifier> model, const FeatureSchema& pool);

struct AttackReport {
  AttackMode mode;
  std::size_t rows = 0;
  double clean_rate = 0.0;     // identification rate on unmodified rows
  double rate = 0.0;           // identification rate (misidentify) or spoofing rate (spoof)
  std::vector<ClassId> predictions;  // victim labels for the manipulated rows
};

/// Manipulates every test row with fresh noise and scores the victim.
AttackReport evaluate_attack(const Generator& g, const Identifier& victim, const Dataset& test,
                             const AttackMode& mode, std::uint64_t seed);

void save_generator(const Generator& g, const std::filesystem::path& path);
Generator load_generator(const std::filesystem::path& path);

}  // namespace iotgan::camouflage
