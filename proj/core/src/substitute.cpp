#include "iotgan/substitute.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include <fmt/core.h>

#include "iotgan/error.hpp"
#include "iotgan/io.hpp"
#include "iotgan/learners/decision_tree.hpp"
#include "iotgan/random.hpp"
#include "json_io.hpp"

namespace iotgan::substitute {

namespace {

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

std::vector<ClassId> argmax_rows(const Eigen::MatrixXd& scores) {
  std::vector<ClassId> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c)
      if (scores(r, c) > scores(r, best)) best = c;
    out[static_cast<std::size_t>(r)] = static_cast<ClassId>(best);
  }
  return out;
}

double agreement(const std::vector<ClassId>& a, const std::vector<ClassId>& b) {
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return a.empty() ? 0.0 : static_cast<double>(same) / static_cast<double>(a.size());
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(idx(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(idx(i)) = m.row(idx(rows[i]));
  return out;
}

std::vector<ClassId> pick(const std::vector<ClassId>& v, const std::vector<std::size_t>& rows) {
  std::vector<ClassId> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(v[r]);
  return out;
}

}  // namespace

std::vector<std::size_t> top_weighted(std::span<const double> weights, std::size_t l) {
  if (l < 1 || l > weights.size())
    throw ValidationError(fmt::format("subset size {} not in [1, {}]", l, weights.size()));
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return weights[a] > weights[b]; });
  order.resize(l);
  std::sort(order.begin(), order.end());
  return order;
}

FeaturePool FeaturePool::full(const FeatureSchema& schema) {
  FeaturePool p;
  p.schema = schema;
  p.selected.resize(schema.size());
  std::iota(p.selected.begin(), p.selected.end(), std::size_t{0});
  return p;
}

FeaturePool FeaturePool::top(const FeatureSchema& schema, std::vector<double> weights, std::size_t l) {
  if (weights.size() != schema.size())
    throw ValidationError(fmt::format("{} weights for {} features", weights.size(), schema.size()));
  FeaturePool p;
  p.schema = schema;
  p.selected = top_weighted(weights, l);
  p.weights = std::move(weights);
  return p;
}

SubstituteModel::SubstituteModel(learners::Mlp net, FeaturePool pool, std::vector<std::string> class_names)
    : net_(std::move(net)), pool_(std::move(pool)), class_names_(std::move(class_names)) {
  if (pool_.selected.empty()) throw ValidationError("substitute needs at least one selected feature");
  for (auto i : pool_.selected)
    if (i >= pool_.schema.size()) throw ValidationError(fmt::format("selected feature {} out of range", i));
  if (net_.input_size() != pool_.selected.size())
    throw ValidationError("substitute network input does not match the selected features");
  if (net_.output_size() != class_names_.size())
    throw ValidationError("substitute network output does not match the class count");
}

Eigen::MatrixXd SubstituteModel::select_columns(const Eigen::MatrixXd& pool_normalized) const {
  Eigen::MatrixXd out(pool_normalized.rows(), idx(pool_.selected.size()));
  for (std::size_t j = 0; j < pool_.selected.size(); ++j) out.col(idx(j)) = pool_normalized.col(idx(pool_.selected[j]));
  return out;
}

Eigen::MatrixXd SubstituteModel::scatter_columns(const Eigen::MatrixXd& selected_grad) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(selected_grad.rows(), idx(pool_.schema.size()));
  for (std::size_t j = 0; j < pool_.selected.size(); ++j) out.col(idx(pool_.selected[j])) = selected_grad.col(idx(j));
  return out;
}

std::vector<double> SubstituteModel::scores(const FeatureVector& x) const {
  pool_.schema.check(x);
  Eigen::VectorXd in(idx(pool_.selected.size()));
  for (std::size_t j = 0; j < pool_.selected.size(); ++j)
    in(idx(j)) = pool_.schema.normalize(pool_.selected[j], x[pool_.selected[j]]);
  const Eigen::VectorXd s = net_.forward(in);
  return {s.data(), s.data() + s.size()};
}

ClassId SubstituteModel::predict(const FeatureVector& x) const { return learners::argmax_lowest(scores(x)); }

std::vector<ClassId> SubstituteModel::predict_normalized(const Eigen::MatrixXd& pool_normalized) const {
  return argmax_rows(net_.logits(select_columns(pool_normalized)));
}

SubstituteModel train_substitute(const blackbox::EavesdropCorpus& corpus, std::span<const std::size_t> subset,
                                 std::size_t epochs, std::uint64_t seed, const SubstituteOptions& options) {
  if (epochs == 0) throw ValidationError("substitute training needs at least one epoch");
  if (corpus.data.empty()) throw ValidationError("empty eavesdrop corpus");
  if (corpus.data.distinct_labels() < 2)
    throw DegenerateTrainingError("eavesdropped labels contain a single class");
  if (corpus.probe_origin.size() != corpus.probes.size() ||
      std::any_of(corpus.probe_origin.begin(), corpus.probe_origin.end(), [&](auto r) { return r >= corpus.size(); }))
    throw ValidationError("probe origins do not index the corpus");
  if (options.hidden.empty()) throw ValidationError("substitute needs at least one hidden layer");

  std::vector<std::size_t> selected(subset.begin(), subset.end());
  std::sort(selected.begin(), selected.end());
  if (selected.empty() || std::adjacent_find(selected.begin(), selected.end()) != selected.end() ||
      selected.back() >= corpus.schema().size())
    throw ValidationError("substitute feature subset must be non-empty, unique and inside the pool");

  FeaturePool pool = FeaturePool::full(corpus.schema());
  pool.selected = selected;

  const auto labels = corpus.data.labels();
  const std::size_t n_classes = corpus.data.n_classes();
  const auto split = stratified_split_indices(labels, n_classes, options.train_fraction,
                                              derive_seed(seed, {0}), /*singletons_to_train=*/true);
  if (split.test.empty()) throw ValidationError("corpus too small for a held-out split");

  std::vector<std::size_t> sizes{selected.size()};
  sizes.insert(sizes.end(), options.hidden.begin(), options.hidden.end());
  sizes.push_back(n_classes);
  SubstituteModel model(learners::Mlp(sizes, derive_seed(seed, {1})), std::move(pool), corpus.data.class_names());

  const Eigen::MatrixXd all = model.select_columns(corpus.data.normalized_matrix());
  const Eigen::MatrixXd x_hold = rows_of(all, split.test);
  const auto y_hold = pick(labels, split.test);
  const auto y_base = pick(labels, split.train);
  const Eigen::MatrixXd x_base = rows_of(all, split.train);

  // Probes drawn around held-out rows stay out of training.
  std::vector<bool> in_train(corpus.size(), false);
  for (auto r : split.train) in_train[r] = true;
  std::vector<std::size_t> probes;
  for (std::size_t i = 0; i < corpus.probes.size(); ++i)
    if (in_train[corpus.probe_origin[i]]) probes.push_back(i);
  Eigen::MatrixXd x_train(x_base.rows() + idx(probes.size()), x_base.cols());
  x_train.topRows(x_base.rows()) = x_base;
  auto y_train = y_base;
  for (std::size_t j = 0; j < probes.size(); ++j) {
    const auto& pr = corpus.probes[probes[j]];
    for (std::size_t c = 0; c < selected.size(); ++c)
      x_train(x_base.rows() + idx(j), idx(c)) = corpus.schema().normalize(selected[c], pr.x[selected[c]]);
    y_train.push_back(pr.label);
  }

  learners::MlpTrainOptions opt;
  opt.epochs = epochs;
  opt.batch_size = options.batch_size;
  opt.learning_rate = options.learning_rate;
  opt.seed = derive_seed(seed, {2});
  learners::train_mlp(model.net_, x_train, learners::one_hot(y_train, n_classes), opt, [&](std::size_t) {
    model.curve_.push_back(agreement(argmax_rows(model.net_.logits(x_hold)), y_hold));
  });
  model.train_agreement_ = agreement(argmax_rows(model.net_.logits(x_base)), y_base);
  model.holdout_ = split.test;
  model.freeze();
  return model;
}

std::vector<double> feature_weights(const blackbox::EavesdropCorpus& corpus, const SubstituteModel& base,
                                    std::uint64_t seed, std::size_t repetitions) {
  const std::size_t k = corpus.schema().size();
  if (base.pool().schema != corpus.schema() || base.pool().selected.size() != k)
    throw ContractViolation("feature weights need a substitute trained on the full feature pool");
  if (repetitions == 0) throw ValidationError("permutation importance needs at least one repetition");

  const auto& hold = base.holdout_rows();
  const Eigen::MatrixXd x = rows_of(corpus.data.normalized_matrix(), hold);
  const auto y = pick(corpus.data.labels(), hold);
  const double reference = agreement(base.predict_normalized(x), y);

  std::vector<double> weights(k, 0.0);
  std::vector<std::size_t> perm(hold.size());
  for (std::size_t f = 0; f < k; ++f) {
    double drop = 0.0;
    for (std::size_t r = 0; r < repetitions; ++r) {
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      Rng rng(derive_seed(seed, {f, r}));
      std::shuffle(perm.begin(), perm.end(), rng);
      Eigen::MatrixXd shuffled = x;
      for (std::size_t i = 0; i < perm.size(); ++i) shuffled(idx(i), idx(f)) = x(idx(perm[i]), idx(f));
      drop += reference - agreement(base.predict_normalized(shuffled), y);
    }
    weights[f] = std::max(0.0, drop / static_cast<double>(repetitions));
  }
  return weights;
}

std::optional<double> performance_gain(double r_c, double r_p, double c_c, double c_p) noexcept {
  if (!std::isfinite(r_c) || !std::isfinite(r_p) || !std::isfinite(c_c) || !std::isfinite(c_p)) return std::nullopt;
  if (r_c == 0.0 || c_c == 0.0 || c_c == c_p) return std::nullopt;
  const double accuracy_growth = (r_c - r_p) / r_c;
  const double cost_growth = (c_c - c_p) / c_c;
  const double gain = (accuracy_growth - cost_growth) / cost_growth;
  if (!std::isfinite(gain)) return std::nullopt;
  return gain;
}

std::vector<PerformanceGainPoint> performance_gain_scan(const blackbox::EavesdropCorpus& corpus,
                                                        std::span<const double> weights,
                                                        std::span<const std::size_t> l_values,
                                                        const ScanOptions& options) {
  const std::size_t k = corpus.schema().size();
  if (l_values.empty()) throw ValidationError("performance gain scan needs at least one subset size");
  if (weights.size() != k) throw ValidationError(fmt::format("{} weights for {} features", weights.size(), k));
  if (!std::is_sorted(l_values.begin(), l_values.end()))
    throw ValidationError("subset sizes must be sorted ascending");
  for (auto l : l_values)
    if (l < 1 || l > k) throw ValidationError(fmt::format("subset size {} not in [1, {}]", l, k));
  if (options.timing_runs == 0 || options.probe_size == 0)
    throw ValidationError("timing needs a non-empty probe set and at least one run");

  std::vector<FeatureVector> probe;
  probe.reserve(options.probe_size);
  for (std::size_t i = 0; i < options.probe_size; ++i) probe.push_back(corpus.data.rows()[i % corpus.size()].x);

  std::vector<PerformanceGainPoint> out;
  for (auto l : l_values) {
    const auto subset = top_weighted(weights, l);
    const auto model = train_substitute(corpus, subset, options.epochs, options.seed, options.substitute);

    std::vector<double> times;
    std::size_t sink = 0;
    for (std::size_t run = 0; run < options.timing_runs; ++run) {
      const auto start = std::chrono::steady_clock::now();
      for (const auto& x : probe) sink += model.predict(x);
      const auto stop = std::chrono::steady_clock::now();
      times.push_back(std::chrono::duration<double>(stop - start).count());
    }
    std::nth_element(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(times.size() / 2), times.end());
    PerformanceGainPoint p;
    p.subset_size = l;
    p.agreement = model.holdout_agreement();
    p.overhead_s = times[times.size() / 2] + static_cast<double>(sink % 2) * 0.0;
    if (!out.empty()) p.gain = performance_gain(p.agreement, out.back().agreement, p.overhead_s, out.back().overhead_s);
    out.push_back(p);
  }
  return out;
}

std::size_t select_subset(std::span<const PerformanceGainPoint> scan, const SelectionPolicy& policy) {
  if (scan.empty()) throw ValidationError("cannot select from an empty scan");
  const double floor = policy.full_pool_agreement - policy.epsilon;
  const PerformanceGainPoint* best = nullptr;
  const PerformanceGainPoint* smallest_ok = nullptr;
  for (const auto& p : scan) {
    if (p.agreement >= floor && (!smallest_ok || p.subset_size < smallest_ok->subset_size)) smallest_ok = &p;
    if (!best || p.agreement > best->agreement ||
        (p.agreement == best->agreement && p.subset_size < best->subset_size))
      best = &p;
  }
  return smallest_ok ? smallest_ok->subset_size : best->subset_size;
}

std::string scan_to_csv(std::span<const PerformanceGainPoint> scan) {
  std::string out = "L,agreement,overhead_s,gain,undefined_flag\n";
  for (const auto& p : scan) {
    out += fmt::format("{},{:.6f},{:.9f},{},{}\n", p.subset_size, p.agreement, p.overhead_s,
                       p.gain ? fmt::format("{:.6f}", *p.gain) : std::string(), p.undefined() ? 1 : 0);
  }
  return out;
}

// ---------------------------------------------------------------------------

void save_substitute(const SubstituteModel& model, const std::filesystem::path& path) {
  using detail::json;
  json doc = {{"format", "iotgan-substitute"},
              {"version", 1},
              {"schema", detail::schema_to_json(model.pool().schema)},
              {"weights", model.pool().weights},
              {"selected", model.pool().selected},
              {"classes", model.class_names()},
              {"curve", model.training_curve()},
              {"train_agreement", model.train_agreement()},
              {"holdout", model.holdout_rows()},
              {"net", detail::mlp_to_json(model.net())}};
  write_file_atomic(path, doc.dump() + "\n");
}

SubstituteModel load_substitute(const std::filesystem::path& path) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("{} is not valid JSON: {}", path.string(), e.what()), 0);
  }
  try {
    if (doc.at("format").get<std::string>() != "iotgan-substitute" || doc.at("version").get<int>() != 1)
      throw ValidationError(fmt::format("{} is not a version 1 substitute document", path.string()));
    FeaturePool pool;
    pool.schema = detail::schema_from_json(doc.at("schema"));
    pool.weights = doc.at("weights").get<std::vector<double>>();
    pool.selected = doc.at("selected").get<std::vector<std::size_t>>();
    SubstituteModel m(detail::mlp_from_json(doc.at("net")), std::move(pool),
                      doc.at("classes").get<std::vector<std::string>>());
    m.curve_ = doc.at("curve").get<std::vector<double>>();
    m.train_agreement_ = doc.at("train_agreement").get<double>();
    m.holdout_ = doc.at("holdout").get<std::vector<std::size_t>>();
    m.freeze();
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("malformed substitute document: {}", e.what()));
  }
}

}  // namespace iotgan::substitute
