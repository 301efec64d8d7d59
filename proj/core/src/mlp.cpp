#include "iotgan/learners/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "iotgan/error.hpp"
#include "iotgan/random.hpp"

namespace iotgan::learners {

namespace {

void check_sizes(const std::vector<std::size_t>& sizes) {
  if (sizes.size() < 2) throw ValidationError("an MLP needs at least input and output sizes");
  for (auto s : sizes)
    if (s == 0) throw ValidationError("MLP layer sizes must be positive");
}

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

}  // namespace

Mlp::Mlp(std::vector<std::size_t> layer_sizes, std::uint64_t seed, OutputActivation output)
    : sizes_(std::move(layer_sizes)), output_(output) {
  check_sizes(sizes_);
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    Eigen::MatrixXd w(idx(sizes_[l + 1]), idx(sizes_[l]));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = u(rng);
    Eigen::VectorXd b(idx(sizes_[l + 1]));
    for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = u(rng);
    weights_.push_back(std::move(w));
    biases_.push_back(std::move(b));
  }
}

Mlp Mlp::zeros(std::vector<std::size_t> layer_sizes, OutputActivation output) {
  check_sizes(layer_sizes);
  Mlp m;
  m.sizes_ = std::move(layer_sizes);
  m.output_ = output;
  for (std::size_t l = 0; l + 1 < m.sizes_.size(); ++l) {
    m.weights_.push_back(Eigen::MatrixXd::Zero(idx(m.sizes_[l + 1]), idx(m.sizes_[l])));
    m.biases_.push_back(Eigen::VectorXd::Zero(idx(m.sizes_[l + 1])));
  }
  return m;
}

std::size_t Mlp::parameter_count() const noexcept {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l)
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  return n;
}

Eigen::MatrixXd Mlp::logits(const Eigen::MatrixXd& x, Cache* cache) const {
  if (x.cols() != idx(input_size()))
    throw ValidationError(fmt::format("MLP expects {} inputs, got {}", input_size(), x.cols()));
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::MatrixXd z = a * weights_[l].transpose();
    z.rowwise() += biases_[l].transpose();
    if (cache) {
      cache->inputs.push_back(a);
      cache->pre.push_back(z);
    }
    if (l + 1 == weights_.size()) return z;
    a = z.cwiseMax(0.0);
  }
  return a;  // unreachable: at least one layer exists
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd z = logits(x);
  return output_ == OutputActivation::Sigmoid ? sigmoid(z) : z;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd row = x.transpose();
  return forward(row).row(0).transpose();
}

void Mlp::backward(const Cache& cache, const Eigen::MatrixXd& d_logits, MlpGradients* grads,
                   Eigen::MatrixXd* d_input) const {
  if (cache.inputs.size() != weights_.size()) throw ValidationError("backward() needs a cache from logits()");
  if (grads && grads->weights.size() != weights_.size()) *grads = zero_gradients();
  Eigen::MatrixXd dz = d_logits;
  for (std::size_t l = weights_.size(); l-- > 0;) {
    if (grads) {
      grads->weights[l].noalias() = dz.transpose() * cache.inputs[l];
      grads->biases[l] = dz.colwise().sum().transpose();
    }
    if (l == 0 && !d_input) break;
    Eigen::MatrixXd da = dz * weights_[l];
    if (l == 0) {
      *d_input = std::move(da);
      break;
    }
    dz = da.cwiseProduct((cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
}

MlpGradients Mlp::zero_gradients() const {
  MlpGradients g;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(weights_[l].rows(), weights_[l].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(biases_[l].size()));
  }
  return g;
}

void Mlp::apply(const MlpGradients& grads, double step) {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    weights_[l] -= step * grads.weights[l];
    biases_[l] -= step * grads.biases[l];
  }
}

bool Mlp::all_finite() const {
  for (std::size_t l = 0; l < weights_.size(); ++l)
    if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
  return true;
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return sigmoid(v); });
}

double bce_from_logits(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& targets) {
  const auto& z = logits.array();
  const auto& t = targets.array();
  const Eigen::ArrayXXd per = z.max(0.0) - z * t + (1.0 + (-z.abs()).exp()).log();
  return per.sum() / static_cast<double>(logits.rows());
}

LossAndGradients mlp_loss_and_gradients(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets) {
  if (x.rows() == 0) throw ValidationError("loss over an empty batch");
  if (targets.rows() != x.rows() || targets.cols() != idx(net.output_size()))
    throw ValidationError(fmt::format("targets shape {}x{} does not match batch {}x{}", targets.rows(),
                                      targets.cols(), x.rows(), net.output_size()));
  if (net.output_activation() != OutputActivation::Sigmoid)
    throw ValidationError("cross-entropy loss needs a sigmoid output layer");
  if (!x.allFinite() || !targets.allFinite()) throw NumericError("non-finite value in loss inputs");
  if ((targets.array() < 0.0).any() || (targets.array() > 1.0).any())
    throw ValidationError("targets must lie in [0, 1]");

  Mlp::Cache cache;
  const Eigen::MatrixXd z = net.logits(x, &cache);
  LossAndGradients out;
  out.loss = bce_from_logits(z, targets);
  const Eigen::MatrixXd dz = (sigmoid(z) - targets) / static_cast<double>(x.rows());
  out.gradients = net.zero_gradients();
  net.backward(cache, dz, &out.gradients, nullptr);
  if (!std::isfinite(out.loss)) throw NumericError("loss is not finite");
  return out;
}

Eigen::VectorXd mlp_input_gradient(const Mlp& net, const Eigen::VectorXd& x, const OutputObjective& objective) {
  if (!x.allFinite()) throw NumericError("non-finite input");
  Mlp::Cache cache;
  Eigen::MatrixXd row = x.transpose();
  const Eigen::MatrixXd z = net.logits(row, &cache);
  Eigen::VectorXd outputs = z.row(0).transpose();
  if (net.output_activation() == OutputActivation::Sigmoid)
    outputs = outputs.unaryExpr([](double v) { return sigmoid(v); });
  Eigen::VectorXd d_out = Eigen::VectorXd::Zero(outputs.size());
  objective(outputs, d_out);
  Eigen::VectorXd d_logits = d_out;
  if (net.output_activation() == OutputActivation::Sigmoid)
    d_logits = d_out.array() * outputs.array() * (1.0 - outputs.array());
  Eigen::MatrixXd d_input;
  net.backward(cache, d_logits.transpose(), nullptr, &d_input);
  Eigen::VectorXd g = d_input.row(0).transpose();
  if (!g.allFinite()) throw NumericError("non-finite input gradient");
  return g;
}

Eigen::MatrixXd mlp_input_gradient_from_logits(const Mlp& net, const Eigen::MatrixXd& x,
                                               const Eigen::MatrixXd& d_logits) {
  Mlp::Cache cache;
  net.logits(x, &cache);
  Eigen::MatrixXd d_input;
  net.backward(cache, d_logits, nullptr, &d_input);
  return d_input;
}

Eigen::MatrixXd one_hot(const std::vector<std::size_t>& labels, std::size_t n_classes) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(idx(labels.size()), idx(n_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= n_classes) throw ValidationError(fmt::format("label {} >= {}", labels[i], n_classes));
    t(idx(i), idx(labels[i])) = 1.0;
  }
  return t;
}

Adam::Adam(const Mlp& net, const AdamOptions& options)
    : options_(options), m_(net.zero_gradients()), v_(net.zero_gradients()) {
  if (!(options.learning_rate >= 0.0) || !std::isfinite(options.learning_rate))
    throw ValidationError("learning rate must be finite and non-negative");
}

void Adam::step(Mlp& net, const MlpGradients& g) {
  if (g.weights.size() != net.layer_count()) throw ValidationError("gradient shape does not match the network");
  ++steps_;
  const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(steps_));
  auto update = [&](auto& param, auto& mom, auto& vel, const auto& grad) {
    mom = options_.beta1 * mom + (1.0 - options_.beta1) * grad;
    vel = options_.beta2 * vel + (1.0 - options_.beta2) * grad.cwiseProduct(grad);
    param.array() -= options_.learning_rate * (mom.array() / c1) / ((vel.array() / c2).sqrt() + options_.epsilon);
  };
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    update(net.weights(l), m_.weights[l], v_.weights[l], g.weights[l]);
    update(net.bias(l), m_.biases[l], v_.biases[l], g.biases[l]);
  }
}

void train_mlp(Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets, const MlpTrainOptions& options,
               const std::function<void(std::size_t)>& on_epoch) {
  if (x.rows() == 0) throw ValidationError("cannot train on an empty matrix");
  if (options.batch_size == 0) throw ValidationError("batch size must be positive");
  if (!(options.learning_rate >= 0.0)) throw ValidationError("learning rate must be non-negative");

  Adam adam(net, {options.learning_rate, options.beta1, options.beta2, options.epsilon});
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(options.seed);

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      const auto rows = static_cast<Eigen::Index>(end - start);
      Eigen::MatrixXd xb(rows, x.cols());
      Eigen::MatrixXd tb(rows, targets.cols());
      for (Eigen::Index r = 0; r < rows; ++r) {
        xb.row(r) = x.row(order[start + static_cast<std::size_t>(r)]);
        tb.row(r) = targets.row(order[start + static_cast<std::size_t>(r)]);
      }
      adam.step(net, mlp_loss_and_gradients(net, xb, tb).gradients);
    }
    if (!net.all_finite()) throw NumericError(fmt::format("MLP parameters diverged at epoch {}", epoch));
    if (on_epoch) on_epoch(epoch);
  }
}

}  // namespace iotgan::learners
