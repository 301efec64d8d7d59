#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace iotgan::learners {

enum class OutputActivation { Sigmoid, Identity };

/// Per-layer parameter gradients, shaped like the network's parameters.
struct MlpGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

/// Fully connected network: ReLU hidden layers, sigmoid (or identity) output.
///
/// Batches are row-major in the sense of one sample per row: X is (batch x in).
/// Layer l holds W_l (out_l x in_l) and b_l (out_l).
class Mlp {
 public:
  /// Forward intermediates needed by backward().
  struct Cache {
    std::vector<Eigen::MatrixXd> inputs;  // input of every layer
    std::vector<Eigen::MatrixXd> pre;     // pre-activation of every layer
  };

  Mlp() = default;

  /// Weights and biases uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], seeded.
  /// Needs at least an input and an output size.
  Mlp(std::vector<std::size_t> layer_sizes, std::uint64_t seed,
      OutputActivation output = OutputActivation::Sigmoid);

  static Mlp zeros(std::vector<std::size_t> layer_sizes, OutputActivation output = OutputActivation::Sigmoid);

  const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
  std::size_t input_size() const noexcept { return sizes_.front(); }
  std::size_t output_size() const noexcept { return sizes_.back(); }
  std::size_t layer_count() const noexcept { return weights_.size(); }
  OutputActivation output_activation() const noexcept { return output_; }
  std::size_t parameter_count() const noexcept;

  Eigen::MatrixXd& weights(std::size_t layer) { return weights_.at(layer); }
  const Eigen::MatrixXd& weights(std::size_t layer) const { return weights_.at(layer); }
  Eigen::VectorXd& bias(std::size_t layer) { return biases_.at(layer); }
  const Eigen::VectorXd& bias(std::size_t layer) const { return biases_.at(layer); }

  Eigen::MatrixXd logits(const Eigen::MatrixXd& x, Cache* cache = nullptr) const;
  /// Output activation applied to logits().
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;

  /// Backpropagates d(loss)/d(logits). Either output may be null.
  void backward(const Cache& cache, const Eigen::MatrixXd& d_logits, MlpGradients* grads,
                Eigen::MatrixXd* d_input) const;

  MlpGradients zero_gradients() const;
  /// params -= step * grads
  void apply(const MlpGradients& grads, double step);

  bool all_finite() const;

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
  OutputActivation output_ = OutputActivation::Sigmoid;
};

double sigmoid(double z) noexcept;
Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z);

/// Binary cross-entropy from logits, summed over outputs, averaged over rows.
double bce_from_logits(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& targets);

struct LossAndGradients {
  double loss = 0.0;
  MlpGradients gradients;
};

/// Mean (over samples) per-class binary cross-entropy of the sigmoid outputs
/// against `targets` (batch x N, entries in [0,1]), with analytic gradients.
/// Throws NumericError on non-finite inputs, ValidationError on bad shapes.
LossAndGradients mlp_loss_and_gradients(const Mlp& net, const Eigen::MatrixXd& x,
                                        const Eigen::MatrixXd& targets);

/// Scalar of the network outputs; writes d(objective)/d(outputs) into `grad`.
using OutputObjective = std::function<double(const Eigen::VectorXd& outputs, Eigen::VectorXd& grad)>;

/// d(objective)/d(x) for one input vector.
Eigen::VectorXd mlp_input_gradient(const Mlp& net, const Eigen::VectorXd& x, const OutputObjective& objective);

/// Batched input gradient given d(loss)/d(logits).
Eigen::MatrixXd mlp_input_gradient_from_logits(const Mlp& net, const Eigen::MatrixXd& x,
                                               const Eigen::MatrixXd& d_logits);

Eigen::MatrixXd one_hot(const std::vector<std::size_t>& labels, std::size_t n_classes);

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam moments for one network.
class Adam {
 public:
  Adam(const Mlp& net, const AdamOptions& options);
  /// One bias-corrected update of `net` along -grads.
  void step(Mlp& net, const MlpGradients& grads);
  std::size_t steps() const noexcept { return steps_; }

 private:
  AdamOptions options_;
  MlpGradients m_;
  MlpGradients v_;
  std::size_t steps_ = 0;
};

struct MlpTrainOptions {
  std::size_t epochs = 40;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
};

/// Adam on mini-batches of the BCE loss. Rows are shuffled each epoch with a
/// seeded generator; `on_epoch(e)` runs after epoch e (0-based).
void train_mlp(Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets, const MlpTrainOptions& options,
               const std::function<void(std::size_t)>& on_epoch = {});

}  // namespace iotgan::learners
