#include "iotgan/camouflage.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "iotgan/error.hpp"
#include "iotgan/io.hpp"
#include "iotgan/learners/classifier.hpp"
#include "iotgan/metrics.hpp"
#include "iotgan/random.hpp"
#include "json_io.hpp"

namespace iotgan::camouflage {

namespace {

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

// Noise for one row, already divided by each feature's width.
Eigen::RowVectorXd noise_row(const FeatureSchema& schema, const FeatureVector& h, std::uint64_t seed) {
  const Noise n = make_noise(h, schema, seed);
  Eigen::RowVectorXd out(idx(schema.size()));
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const double w = schema[i].width();
    out(idx(i)) = w > 0.0 ? n.s[i] / w : 0.0;
  }
  return out;
}

struct Batch {
  Eigen::MatrixXd u;
  Eigen::MatrixXd s_u;
};

Batch make_batch(const FeatureSchema& schema, std::span<const FeatureVector> rows,
                 const std::function<std::uint64_t(std::size_t)>& seed_of) {
  const auto k = idx(schema.size());
  Batch b{Eigen::MatrixXd(idx(rows.size()), k), Eigen::MatrixXd(idx(rows.size()), k)};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t i = 0; i < schema.size(); ++i) b.u(idx(r), idx(i)) = schema.normalize(i, rows[r][i]);
    b.s_u.row(idx(r)) = noise_row(schema, rows[r], seed_of(r));
  }
  return b;
}

FeatureVector to_physical(const Generator& g, const FeatureVector& h, const Eigen::Ref<const Eigen::RowVectorXd>& u) {
  FeatureVector out = h;
  for (std::size_t i = 0; i < g.schema().size(); ++i) {
    if (!g.mask()[i]) continue;
    const double v = u(idx(i));
    if (!std::isfinite(v)) throw NumericError(fmt::format("generator produced a non-finite value for '{}'", g.schema()[i].name));
    out[i] = g.schema().denormalize(i, v);
  }
  return out;
}

void check_rows(const FeatureSchema& schema, std::span<const FeatureVector> rows) {
  for (const auto& h : rows) schema.check(h);
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd p = (z.colwise() - z.rowwise().maxCoeff()).array().exp().matrix();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

double success_fraction(const std::vector<ClassId>& before, const std::vector<ClassId>& after, const AttackMode& mode) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < after.size(); ++i)
    hits += mode.is_spoof() ? after[i] == mode.target : after[i] != before[i];
  return after.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(after.size());
}

}  // namespace

Noise make_noise(const FeatureVector& h, const FeatureSchema& schema, std::uint64_t seed) {
  if (h.size() != schema.size())
    throw ValidationError(fmt::format("vector has {} features, schema has {}", h.size(), schema.size()));
  Rng rng(seed);
  std::uniform_real_distribution<double> dist(0.0, kMaxMultiplier);
  Noise n;
  n.r.r.assign(schema.size(), 0.0);
  n.s.assign(schema.size(), 0.0);
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (!schema[i].is_mutable) continue;
    n.r.r[i] = std::min(dist(rng), kMaxMultiplier);
    n.s[i] = n.r.r[i] * h[i];
  }
  return n;
}

std::string to_string(const AttackMode& mode) {
  return mode.is_spoof() ? fmt::format("spoof:{}", mode.target) : std::string("misidentify");
}

Generator::Generator(FeatureSchema schema, const GeneratorOptions& options)
    : Generator(schema, [&] {
        if (schema.empty()) throw ValidationError("generator needs a non-empty schema");
        std::vector<std::size_t> sizes{2 * schema.size()};
        sizes.insert(sizes.end(), options.hidden.begin(), options.hidden.end());
        sizes.push_back(schema.size());
        learners::Mlp net(sizes, options.seed, learners::OutputActivation::Identity);
        const std::size_t last = net.layer_count() - 1;
        net.weights(last).setZero();
        net.bias(last).setZero();
        return net;
      }(), options.budget) {}

Generator::Generator(FeatureSchema schema, learners::Mlp net, double budget)
    : schema_(std::move(schema)), net_(std::move(net)), budget_(budget), mask_(schema_.mutable_mask()) {
  if (!(budget_ > 0.0 && budget_ <= 1.0)) throw ValidationError(fmt::format("generator budget {} not in (0, 1]", budget_));
  if (net_.input_size() != 2 * schema_.size() || net_.output_size() != schema_.size())
    throw ValidationError("generator network must map 2K inputs to K outputs");
  if (net_.output_activation() != learners::OutputActivation::Identity)
    throw ValidationError("generator network needs an identity output");
  mask_row_.resize(idx(schema_.size()));
  for (std::size_t i = 0; i < schema_.size(); ++i) mask_row_(idx(i)) = mask_[i] ? 1.0 : 0.0;
}

Eigen::MatrixXd Generator::forward_normalized(const Eigen::MatrixXd& u, const Eigen::MatrixXd& s_u, Pass* pass) const {
  const auto k = idx(schema_.size());
  if (u.cols() != k || s_u.cols() != k || u.rows() != s_u.rows())
    throw ValidationError("generator input shape does not match the schema");
  Eigen::MatrixXd z(u.rows(), 2 * k);
  z << u, s_u;
  Pass local;
  Pass& p = pass ? *pass : local;
  p.squashed = net_.logits(z, pass ? &p.cache : nullptr).array().tanh().matrix();
  p.raw = u + ((p.squashed.array().rowwise() * mask_row_.array()) * budget_).matrix();
  p.out = p.raw.cwiseMax(0.0).cwiseMin(1.0);
  // Immutable columns pass through untouched, including any value the clamp would move.
  for (std::size_t i = 0; i < schema_.size(); ++i)
    if (!mask_[i]) p.out.col(idx(i)) = u.col(idx(i));
  return p.out;
}

FeatureVector manipulate(const Generator& g, const FeatureVector& h, std::span<const double> s) {
  const auto& schema = g.schema();
  schema.check(h);
  if (s.size() != schema.size())
    throw ValidationError(fmt::format("noise has {} entries, schema has {}", s.size(), schema.size()));
  Eigen::RowVectorXd u(idx(schema.size())), s_u(idx(schema.size()));
  for (std::size_t i = 0; i < schema.size(); ++i) {
    u(idx(i)) = schema.normalize(i, h[i]);
    const double w = schema[i].width();
    s_u(idx(i)) = w > 0.0 ? s[i] / w : 0.0;
  }
  const Eigen::MatrixXd out = g.forward_normalized(u, s_u);
  return to_physical(g, h, out.row(0));
}

std::vector<FeatureVector> manipulate_all(const Generator& g, std::span<const FeatureVector> rows, std::uint64_t seed) {
  check_rows(g.schema(), rows);
  const Batch b = make_batch(g.schema(), rows, [&](std::size_t r) { return derive_seed(seed, {r}); });
  const Eigen::MatrixXd out = g.forward_normalized(b.u, b.s_u);
  std::vector<FeatureVector> result;
  result.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) result.push_back(to_physical(g, rows[r], out.row(idx(r))));
  return result;
}

double substitute_success(const Generator& g, const substitute::SubstituteModel& sub,
                          std::span<const FeatureVector> rows, const AttackMode& mode, std::uint64_t seed) {
  if (rows.empty()) throw EmptyEvaluationError("no rows to attack");
  check_rows(g.schema(), rows);
  const Batch b = make_batch(g.schema(), rows, [&](std::size_t r) { return derive_seed(seed, {r}); });
  const auto before = sub.predict_normalized(b.u);
  const auto after = sub.predict_normalized(g.forward_normalized(b.u, b.s_u));
  return success_fraction(before, after, mode);
}

GeneratorStep generator_gradients(const Generator& g, const substitute::SubstituteModel& sub, const Eigen::MatrixXd& u,
                                  const Eigen::MatrixXd& s_u, const Eigen::MatrixXd& targets, bool ascend) {
  if (targets.rows() != u.rows() || targets.cols() != idx(sub.n_classes()))
    throw ValidationError("target matrix does not match the batch and the substitute classes");
  GeneratorStep step;
  Generator::Pass pass;
  step.out = g.forward_normalized(u, s_u, &pass);

  learners::Mlp::Cache sub_cache;
  const Eigen::MatrixXd z = sub.net().logits(sub.select_columns(step.out), &sub_cache);
  const Eigen::MatrixXd prob = softmax_rows(z);
  const double n = static_cast<double>(u.rows());
  const double sign = ascend ? -1.0 : 1.0;
  step.loss = -sign * (targets.array() * prob.array().max(1e-300).log()).sum() / n;
  const Eigen::MatrixXd dz = sign * (prob - targets) / n;
  Eigen::MatrixXd d_sel;
  sub.net().backward(sub_cache, dz, nullptr, &d_sel);
  Eigen::MatrixXd d_out = sub.scatter_columns(d_sel);

  // The clamp passes gradient only where descent would not push further out of range.
  for (Eigen::Index r = 0; r < d_out.rows(); ++r)
    for (Eigen::Index c = 0; c < d_out.cols(); ++c) {
      const double raw = pass.raw(r, c);
      if ((raw <= 0.0 && d_out(r, c) > 0.0) || (raw >= 1.0 && d_out(r, c) < 0.0)) d_out(r, c) = 0.0;
    }
  Eigen::RowVectorXd mask(d_out.cols());
  for (Eigen::Index c = 0; c < mask.size(); ++c) mask(c) = g.mask()[static_cast<std::size_t>(c)] ? g.budget() : 0.0;
  const Eigen::MatrixXd d_net = ((d_out.array() * (1.0 - pass.squashed.array().square())).rowwise() * mask.array()).matrix();
  g.net().backward(pass.cache, d_net, &step.gradients, nullptr);
  return step;
}

Generator train_generator(Generator g, const substitute::SubstituteModel& sub, const Dataset& train,
                          const AttackMode& mode, const GeneratorTrainOptions& options, const EpochObserver& on_epoch) {
  if (!sub.frozen()) throw ContractViolation("generator training needs a frozen substitute");
  if (options.epochs == 0) throw ValidationError("generator training needs at least one epoch");
  if (options.batch_size == 0) throw ValidationError("batch size must be positive");
  if (!std::isfinite(options.learning_rate) || options.learning_rate < 0.0)
    throw ValidationError("learning rate must be finite and non-negative");
  if (options.plateau_window == 0) throw ValidationError("plateau window must be positive");
  if (sub.pool().schema != g.schema() || train.schema() != g.schema())
    throw ValidationError("generator, substitute and training data must share one feature pool");
  if (train.empty()) throw ValidationError("generator training data is empty");
  if (mode.is_spoof() && mode.target >= sub.n_classes())
    throw ValidationError(fmt::format("spoof target {} not below {}", mode.target, sub.n_classes()));

  const auto& rows = train.rows();
  std::vector<FeatureVector> xs;
  xs.reserve(rows.size());
  for (const auto& r : rows) xs.push_back(r.x);

  const Eigen::MatrixXd u_all = train.normalized_matrix();
  const std::size_t n_classes = sub.n_classes();
  Eigen::MatrixXd targets;
  if (mode.is_spoof()) {
    targets = Eigen::MatrixXd::Zero(u_all.rows(), idx(n_classes));
    targets.col(idx(mode.target)).setOnes();
  } else {
    targets = learners::one_hot(sub.predict_normalized(u_all), n_classes);
  }
  const std::uint64_t eval_seed = derive_seed(options.seed, {3});

  std::vector<std::size_t> order(rows.size());
  learners::Adam adam(g.net(), {options.learning_rate});
  g.training_curve().clear();
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffler(derive_seed(options.seed, {1, epoch}));
    std::shuffle(order.begin(), order.end(), shuffler);

    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t n = std::min(options.batch_size, order.size() - start);
      Eigen::MatrixXd u(idx(n), u_all.cols()), s_u(idx(n), u_all.cols()), t(idx(n), idx(n_classes));
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t r = order[start + j];
        u.row(idx(j)) = u_all.row(idx(r));
        t.row(idx(j)) = targets.row(idx(r));
        s_u.row(idx(j)) = noise_row(g.schema(), xs[r], derive_seed(options.seed, {2, epoch, r}));
      }
      adam.step(g.net(), generator_gradients(g, sub, u, s_u, t, !mode.is_spoof()).gradients);
    }
    if (!g.net().all_finite()) throw NumericError(fmt::format("generator diverged in epoch {}", epoch));

    const double success = substitute_success(g, sub, xs, mode, eval_seed);
    auto& curve = g.training_curve();
    curve.push_back(success);
    if (on_epoch) on_epoch(epoch, g);
    if (curve.size() > options.plateau_window &&
        std::abs(curve.back() - curve[curve.size() - 1 - options.plateau_window]) < options.plateau_tolerance)
      break;
  }
  return g;
}

Identifier identifier(const blackbox::Oracle& oracle) {
  return [&oracle](const FeatureVector& x) { return oracle.query(x).id; };
}

Identifier identifier(const substitute::SubstituteModel& sub) {
  return [&sub](const FeatureVector& x) { return sub.predict(x); };
}

Identifier identifier(std::shared_ptr<const learners::Classifier> model, const FeatureSchema& pool) {
  if (!model) throw ValidationError("null classifier");
  auto projection = pool.indices_of(model->schema());
  return [model = std::move(model), projection = std::move(projection)](const FeatureVector& x) {
    return learners::predict(*model, FeatureSchema::project(x, projection));
  };
}

AttackReport evaluate_attack(const Generator& g, const Identifier& victim, const Dataset& test, const AttackMode& mode,
                             std::uint64_t seed) {
  if (test.empty()) throw EmptyEvaluationError("no test rows to attack");
  if (test.schema() != g.schema()) throw ValidationError("test data and generator use different feature pools");
  if (mode.is_spoof() && mode.target >= test.n_classes())
    throw ValidationError(fmt::format("spoof target {} not below {}", mode.target, test.n_classes()));

  std::vector<FeatureVector> xs;
  xs.reserve(test.size());
  for (const auto& r : test.rows()) xs.push_back(r.x);
  const auto labels = test.labels();

  AttackReport report;
  report.mode = mode;
  report.rows = xs.size();
  ConfusionCounts clean(test.n_classes());
  for (std::size_t i = 0; i < xs.size(); ++i) clean.add(labels[i], victim(xs[i]));
  report.clean_rate = identification_rate(clean);

  const auto attacked = manipulate_all(g, xs, seed);
  report.predictions.reserve(attacked.size());
  for (const auto& x : attacked) report.predictions.push_back(victim(x));
  if (mode.is_spoof()) {
    report.rate = spoofing_rate(report.predictions, mode.target);
  } else {
    report.rate = identification_rate(ConfusionCounts::tally(labels, report.predictions, test.n_classes()));
  }
  return report;
}

void save_generator(const Generator& g, const std::filesystem::path& path) {
  using detail::json;
  json doc = {{"format", "iotgan-generator"},
              {"version", 1},
              {"schema", detail::schema_to_json(g.schema())},
              {"budget", g.budget()},
              {"curve", g.training_curve()},
              {"net", detail::mlp_to_json(g.net())}};
  write_file_atomic(path, doc.dump() + "\n");
}

Generator load_generator(const std::filesystem::path& path) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("{} is not valid JSON: {}", path.string(), e.what()), 0);
  }
  try {
    if (doc.at("format").get<std::string>() != "iotgan-generator" || doc.at("version").get<int>() != 1)
      throw ValidationError(fmt::format("{} is not a version 1 generator document", path.string()));
    Generator g(detail::schema_from_json(doc.at("schema")), detail::mlp_from_json(doc.at("net")),
                doc.at("budget").get<double>());
    g.training_curve() = doc.at("curve").get<std::vector<double>>();
    return g;
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("malformed generator document: {}", e.what()));
  }
}

}  // namespace iotgan::camouflage
