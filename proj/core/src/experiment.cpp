#include "iotgan/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <memory>
#include <numeric>
#include <set>

#include <fmt/core.h>

#include "iotgan/blackbox.hpp"
#include "iotgan/csv.hpp"
#include "iotgan/error.hpp"
#include "iotgan/io.hpp"
#include "iotgan/metrics.hpp"
#include "iotgan/random.hpp"
#include "iotgan/report.hpp"

namespace iotgan::harness {

namespace {

using learners::ClassifierKind;

// Stage codes mixed into derived seeds. Changing one changes every output.
enum : std::uint64_t {
  kSeedData = 1,
  kSeedSplit,
  kSeedTarget,
  kSeedSubstitute,
  kSeedGenerator,
  kSeedAttackEval,
  kSeedSpoof,
  kSeedDefense
};

std::uint64_t kind_code(ClassifierKind k) { return static_cast<std::uint64_t>(k); }

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  if (trim(v).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = v.find(',', start);
    out.push_back(trim(v.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class T>
T parse_integer(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  T v{};
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || p != t.data() + t.size())
    throw ValidationError(fmt::format("{}: '{}' is not a non-negative integer", key, text));
  return v;
}

double parse_real(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  double v = 0.0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || p != t.data() + t.size() || !std::isfinite(v))
    throw ValidationError(fmt::format("{}: '{}' is not a finite number", key, text));
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  throw ValidationError(fmt::format("{}: '{}' is not true or false", key, text));
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

struct Setting {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
};

template <class T>
Setting integer_setting(std::string key, T ExperimentConfig::*field) {
  return {key, [field](const ExperimentConfig& c) { return fmt::format("{}", c.*field); },
          [key, field](ExperimentConfig& c, std::string_view v) { c.*field = parse_integer<T>(key, v); }};
}

Setting real_setting(std::string key, double ExperimentConfig::*field) {
  return {key, [field](const ExperimentConfig& c) { return fmt::format("{}", c.*field); },
          [key, field](ExperimentConfig& c, std::string_view v) { c.*field = parse_real(key, v); }};
}

Setting bool_setting(std::string key, bool ExperimentConfig::*field) {
  return {key, [field](const ExperimentConfig& c) { return std::string(c.*field ? "true" : "false"); },
          [key, field](ExperimentConfig& c, std::string_view v) { c.*field = parse_bool(key, v); }};
}

Setting string_setting(std::string key, std::string ExperimentConfig::*field) {
  return {key, [field](const ExperimentConfig& c) { return c.*field; },
          [field](ExperimentConfig& c, std::string_view v) { c.*field = trim(v); }};
}

Setting list_setting(std::string key, std::vector<std::string> ExperimentConfig::*field) {
  return {key, [field](const ExperimentConfig& c) { return join(c.*field); },
          [field](ExperimentConfig& c, std::string_view v) { c.*field = split_list(v); }};
}

const std::vector<Setting>& settings() {
  static const std::vector<Setting> table = [] {
    std::vector<Setting> s;
    s.push_back(integer_setting("seed", &ExperimentConfig::seed));
    s.push_back(integer_setting("n_classes", &ExperimentConfig::n_classes));
    s.push_back(integer_setting("rows_per_class", &ExperimentConfig::rows_per_class));
    s.push_back(string_setting("schema_path", &ExperimentConfig::schema_path));
    s.push_back(string_setting("data_path", &ExperimentConfig::data_path));
    s.push_back(list_setting("immutable_features", &ExperimentConfig::immutable_features));
    s.push_back({"target_kinds",
                 [](const ExperimentConfig& c) {
                   std::vector<std::string> names;
                   for (auto k : c.target_kinds) names.emplace_back(learners::to_string(k));
                   return join(names);
                 },
                 [](ExperimentConfig& c, std::string_view v) {
                   c.target_kinds.clear();
                   for (const auto& name : split_list(v)) c.target_kinds.push_back(learners::parse_kind(name));
                 }});
    s.push_back(list_setting("target_features", &ExperimentConfig::target_features));
    s.push_back(real_setting("train_fraction", &ExperimentConfig::train_fraction));
    s.push_back(integer_setting("substitute_epochs", &ExperimentConfig::substitute_epochs));
    s.push_back(integer_setting("probe_copies", &ExperimentConfig::probe_copies));
    s.push_back(bool_setting("feature_scan", &ExperimentConfig::feature_scan));
    s.push_back({"scan_sizes",
                 [](const ExperimentConfig& c) {
                   std::vector<std::string> v;
                   for (auto l : c.scan_sizes) v.push_back(fmt::format("{}", l));
                   return join(v);
                 },
                 [](ExperimentConfig& c, std::string_view v) {
                   c.scan_sizes.clear();
                   for (const auto& item : split_list(v)) c.scan_sizes.push_back(parse_integer<std::size_t>("scan_sizes", item));
                 }});
    s.push_back(integer_setting("scan_epochs", &ExperimentConfig::scan_epochs));
    s.push_back(real_setting("selection_epsilon", &ExperimentConfig::selection_epsilon));
    s.push_back(integer_setting("generator_epochs", &ExperimentConfig::generator_epochs));
    s.push_back(real_setting("generator_learning_rate", &ExperimentConfig::generator_learning_rate));
    s.push_back(real_setting("generator_budget", &ExperimentConfig::generator_budget));
    s.push_back(bool_setting("misidentify", &ExperimentConfig::misidentify));
    s.push_back(bool_setting("spoof", &ExperimentConfig::spoof));
    s.push_back(integer_setting("spoof_rows", &ExperimentConfig::spoof_rows));
    s.push_back(integer_setting("spoof_epochs", &ExperimentConfig::spoof_epochs));
    s.push_back(bool_setting("defense", &ExperimentConfig::defense));
    s.push_back({"defense_kind", [](const ExperimentConfig& c) { return std::string(learners::to_string(c.defense_kind)); },
                 [](ExperimentConfig& c, std::string_view v) { c.defense_kind = learners::parse_kind(trim(v)); }});
    s.push_back(integer_setting("signatures_per_device", &ExperimentConfig::signatures_per_device));
    s.push_back(string_setting("output_dir", &ExperimentConfig::output_dir));
    return s;
  }();
  return table;
}

const Setting& find_setting(std::string_view key) {
  for (const auto& s : settings())
    if (s.key == key) return s;
  throw ValidationError(fmt::format("unknown setting '{}'", key));
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

FeatureSchema with_mask(const FeatureSchema& schema, const std::vector<std::string>& immutable) {
  if (immutable.empty()) return schema;
  for (const auto& name : immutable)
    if (!schema.index_of(name)) throw ValidationError(fmt::format("immutable feature '{}' is not in the schema", name));
  std::vector<FeatureSpec> specs(schema.features().begin(), schema.features().end());
  for (auto& f : specs) f.is_mutable = std::find(immutable.begin(), immutable.end(), f.name) == immutable.end();
  return FeatureSchema(std::move(specs));
}

bool same_columns(const FeatureSchema& a, const FeatureSchema& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].name != b[i].name || a[i].min != b[i].min || a[i].max != b[i].max) return false;
  return true;
}

std::vector<FeatureVector> vectors_of(const Dataset& ds) {
  std::vector<FeatureVector> out;
  out.reserve(ds.size());
  for (const auto& r : ds.rows()) out.push_back(r.x);
  return out;
}

double rate_against(const std::vector<ClassId>& truth, const std::vector<ClassId>& predicted, std::size_t n) {
  return identification_rate(ConfusionCounts::tally(truth, predicted, n));
}

std::optional<DeviceType> type_of_label(const std::string& label) {
  try {
    return device_type_of(label);
  } catch (const ValidationError&) {
    return std::nullopt;
  }
}

// Per-kind state carried between stages.
struct Victim {
  ClassifierKind kind;
  std::shared_ptr<const learners::Classifier> model;
  std::unique_ptr<blackbox::Oracle> oracle;
  blackbox::EavesdropCorpus corpus;
  std::optional<substitute::SubstituteModel> sub;
};

}  // namespace

void ExperimentConfig::validate() const {
  if (n_classes < 2) throw ValidationError("n_classes must be at least 2");
  if (rows_per_class < 2) throw ValidationError("rows_per_class must be at least 2");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ValidationError("train_fraction must be in (0, 1)");
  if (substitute_epochs == 0) throw ValidationError("substitute_epochs must be positive");
  if (feature_scan && scan_sizes.empty()) throw ValidationError("scan_sizes must not be empty");
  if (feature_scan && scan_epochs == 0) throw ValidationError("scan_epochs must be positive");
  if (std::any_of(scan_sizes.begin(), scan_sizes.end(), [](std::size_t l) { return l == 0; }))
    throw ValidationError("scan_sizes entries must be positive");
  if (!(selection_epsilon >= 0.0)) throw ValidationError("selection_epsilon must be non-negative");
  if (generator_epochs == 0 || spoof_epochs == 0) throw ValidationError("generator epochs must be positive");
  if (!(generator_learning_rate >= 0.0)) throw ValidationError("generator_learning_rate must be non-negative");
  if (!(generator_budget > 0.0 && generator_budget <= 1.0)) throw ValidationError("generator_budget must be in (0, 1]");
  if (spoof_rows == 0) throw ValidationError("spoof_rows must be positive");
  if (target_kinds.empty()) throw ValidationError("target_kinds must not be empty");
  if (std::set<ClassifierKind>(target_kinds.begin(), target_kinds.end()).size() != target_kinds.size())
    throw ValidationError("target_kinds contains duplicates");
  if (defense) {
    if (!misidentify) throw ValidationError("defense needs the misidentify stage");
    if (std::find(target_kinds.begin(), target_kinds.end(), defense_kind) == target_kinds.end())
      throw ValidationError("defense_kind must be one of target_kinds");
    if (signatures_per_device < profiler::kMinSignaturesPerClass)
      throw ValidationError(fmt::format("signatures_per_device must be at least {}", profiler::kMinSignaturesPerClass));
  }
  if (output_dir.empty()) throw ValidationError("output_dir must not be empty");
}

std::vector<std::string> setting_keys() {
  std::vector<std::string> out;
  for (const auto& s : settings()) out.push_back(s.key);
  return out;
}

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  find_setting(key).set(cfg, value);
}

std::string setting_value(const ExperimentConfig& cfg, std::string_view key) { return find_setting(key).get(cfg); }

std::string canonical_settings(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& s : settings())
    if (s.key != "output_dir") out += fmt::format("{}={}\n", s.key, s.get(cfg));
  return out;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) { return fnv1a(canonical_settings(cfg)); }

ExperimentConfig parse_manifest(const std::string& text, ExperimentConfig base) {
  std::optional<std::string> recorded_hash;
  std::size_t line_no = 0;
  std::string_view rest(text);
  while (!rest.empty()) {
    ++line_no;
    const auto nl = rest.find('\n');
    const std::string line = trim(rest.substr(0, nl));
    rest.remove_prefix(nl == std::string_view::npos ? rest.size() : nl + 1);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(fmt::format("line {}: expected key=value", line_no), line_no);
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = std::string(std::string_view(line).substr(eq + 1));
    if (key.rfind("derived.", 0) == 0 || key == "status" || key == "stage") continue;
    if (key == "config_hash") {
      recorded_hash = trim(value);
      continue;
    }
    try {
      apply_setting(base, key, value);
    } catch (const ValidationError& e) {
      throw ParseError(fmt::format("line {}: {}", line_no, e.what()), line_no);
    }
  }
  if (recorded_hash && *recorded_hash != fmt::format("{:016x}", config_hash(base)))
    throw ValidationError("manifest config_hash does not match its settings");
  return base;
}

ExperimentConfig load_manifest(const std::filesystem::path& path, ExperimentConfig base) {
  return parse_manifest(read_file(path), std::move(base));
}

std::map<std::string, std::uint64_t> stage_seeds(const ExperimentConfig& cfg) {
  std::map<std::string, std::uint64_t> s;
  s["data"] = derive_seed(cfg.seed, {kSeedData});
  s["split"] = derive_seed(cfg.seed, {kSeedSplit});
  for (auto k : cfg.target_kinds) {
    const std::string name(learners::to_string(k));
    s["target." + name] = derive_seed(cfg.seed, {kSeedTarget, kind_code(k)});
    s["substitute." + name] = derive_seed(cfg.seed, {kSeedSubstitute, kind_code(k)});
    s["generator." + name] = derive_seed(cfg.seed, {kSeedGenerator, kind_code(k)});
    s["attack_eval." + name] = derive_seed(cfg.seed, {kSeedAttackEval, kind_code(k)});
    s["spoof." + name] = derive_seed(cfg.seed, {kSeedSpoof, kind_code(k)});
  }
  s["defense"] = derive_seed(cfg.seed, {kSeedDefense});
  return s;
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  PreparedData p;
  const FeatureSchema base = cfg.schema_path.empty() ? default_schema() : load_schema(cfg.schema_path);
  p.schema = with_mask(base, cfg.immutable_features);
  const auto seeds = stage_seeds(cfg);
  if (cfg.data_path.empty()) {
    const FeatureSchema reference = default_schema();
    if (!same_columns(p.schema, reference)) throw ValidationError("synthetic data needs the built-in schema columns");
    SyntheticOptions opts;
    opts.n_classes = cfg.n_classes;
    const auto profiles = default_profiles(reference, seeds.at("data"), opts);
    Dataset generated = generate_dataset(reference, profiles, cfg.rows_per_class, derive_seed(seeds.at("data"), {1}),
                                         [&](std::string_view w) { p.warnings.emplace_back(w); });
    p.all = Dataset(p.schema, generated.class_names(), generated.rows(), generated.split_seed());
  } else {
    p.all = ingest_csv(cfg.data_path, p.schema);
  }
  auto [train, test] = split_dataset(p.all, cfg.train_fraction, seeds.at("split"));
  p.train = std::move(train);
  p.test = std::move(test);
  return p;
}

std::vector<std::pair<DeviceType, DeviceType>> spoof_pairs() {
  using T = DeviceType;
  const std::pair<T, T> pairs[] = {{T::Camera, T::Hub},    {T::Camera, T::Health}, {T::Camera, T::Switch},
                                   {T::Hub, T::Health},    {T::Hub, T::Switch},    {T::Switch, T::Health}};
  std::vector<std::pair<T, T>> out;
  for (auto [a, b] : pairs) {
    out.emplace_back(a, b);
    out.emplace_back(b, a);
  }
  return out;
}

ClassId spoof_target_class(const blackbox::EavesdropCorpus& corpus, DeviceType source, DeviceType target) {
  const auto& names = corpus.data.class_names();
  const Eigen::MatrixXd u = corpus.data.normalized_matrix();
  const auto labels = corpus.data.labels();
  const auto k = u.cols();
  Eigen::RowVectorXd src = Eigen::RowVectorXd::Zero(k);
  std::size_t n_src = 0;
  std::vector<Eigen::RowVectorXd> centroid(names.size(), Eigen::RowVectorXd::Zero(k));
  std::vector<std::size_t> count(names.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto t = type_of_label(names[labels[i]]);
    if (t == source) {
      src += u.row(static_cast<Eigen::Index>(i));
      ++n_src;
    }
    centroid[labels[i]] += u.row(static_cast<Eigen::Index>(i));
    ++count[labels[i]];
  }
  if (n_src == 0) throw ValidationError(fmt::format("no {} rows in the corpus", to_string(source)));
  src /= static_cast<double>(n_src);
  std::optional<ClassId> best;
  double best_d = 0.0;
  for (ClassId c = 0; c < names.size(); ++c) {
    if (count[c] == 0 || type_of_label(names[c]) != target) continue;
    const double d = (centroid[c] / static_cast<double>(count[c]) - src).squaredNorm();
    if (!best || d < best_d) {
      best = c;
      best_d = d;
    }
  }
  if (!best) throw ValidationError(fmt::format("no {} class answered by the oracle", to_string(target)));
  return *best;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Progress& progress) {
  cfg.validate();
  const std::filesystem::path out_dir(cfg.output_dir);
  ExperimentResult result;
  result.config = cfg;
  result.hash = config_hash(cfg);
  result.seeds = stage_seeds(cfg);
  const auto& seeds = result.seeds;
  auto note = [&](std::string_view msg) {
    if (progress) progress(msg);
  };
  write_file_atomic(out_dir / "manifest.txt", manifest_text(cfg, seeds, "running"));

  auto stage = [&](std::string_view name, auto&& body) {
    note(fmt::format("stage {}", name));
    try {
      body();
    } catch (const std::exception& e) {
      try {
        write_file_atomic(out_dir / "manifest.txt", manifest_text(cfg, seeds, "failed", name));
      } catch (const IoError&) {
      }
      throw StageFailure(std::string(name), e.what());
    }
  };

  PreparedData data;
  stage("data", [&] {
    data = prepare_data(cfg);
    result.warnings = data.warnings;
  });
  const FeatureSchema& pool = data.schema;
  const std::size_t n_classes = data.all.n_classes();
  const auto train_x = vectors_of(data.train);
  const auto train_y = data.train.labels();
  const auto test_x = vectors_of(data.test);
  const auto test_y = data.test.labels();

  FeatureSchema target_schema;
  std::vector<Victim> victims;
  stage("targets", [&] {
    const auto names = cfg.target_features.empty() ? default_target_features() : cfg.target_features;
    std::vector<std::size_t> cols;
    for (const auto& n : names) {
      auto i = pool.index_of(n);
      if (!i) throw ValidationError(fmt::format("target feature '{}' is not in the schema", n));
      cols.push_back(*i);
    }
    target_schema = pool.subset(cols);
    const Dataset train_t = data.train.project(target_schema);
    const Dataset test_t = data.test.project(target_schema);
    for (auto kind : cfg.target_kinds) {
      note(fmt::format("  fit {}", learners::to_string(kind)));
      learners::Hyperparams hp;
      hp.seed = seeds.at(fmt::format("target.{}", learners::to_string(kind)));
      auto model = std::make_shared<const learners::Classifier>(learners::fit(kind, train_t, hp));
      KindResult kr;
      kr.kind = kind;
      kr.target_train_rate = rate_against(train_y, learners::predict_all(*model, train_t), n_classes);
      kr.target_test_rate = rate_against(test_y, learners::predict_all(*model, test_t), n_classes);
      result.kinds.push_back(kr);
      victims.push_back({kind, model, nullptr, {}, std::nullopt});
    }
  });

  stage("substitute", [&] {
    for (std::size_t v = 0; v < victims.size(); ++v) {
      auto& vic = victims[v];
      auto& kr = result.kinds[v];
      const std::uint64_t s = seeds.at(fmt::format("substitute.{}", learners::to_string(vic.kind)));
      note(fmt::format("  substitute for {}", learners::to_string(vic.kind)));
      vic.oracle = std::make_unique<blackbox::Oracle>(vic.model, pool);
      vic.corpus = vic.oracle->collect(train_x);

      std::vector<std::size_t> all(pool.size());
      std::iota(all.begin(), all.end(), std::size_t{0});
      auto full = substitute::train_substitute(vic.corpus, all, cfg.substitute_epochs, derive_seed(s, {0}));
      kr.full_pool_agreement = full.holdout_agreement();
      kr.weights = substitute::feature_weights(vic.corpus, full, derive_seed(s, {1}));
      if (cfg.feature_scan) {
        std::vector<std::size_t> sizes;
        for (auto l : cfg.scan_sizes) sizes.push_back(std::min(l, pool.size()));
        std::sort(sizes.begin(), sizes.end());
        sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
        substitute::ScanOptions so;
        so.epochs = cfg.scan_epochs;
        so.seed = derive_seed(s, {2});
        kr.scan = substitute::performance_gain_scan(vic.corpus, kr.weights, sizes, so);
        const std::size_t l = substitute::select_subset(kr.scan, {kr.full_pool_agreement, cfg.selection_epsilon});
        kr.selected_features = substitute::top_weighted(kr.weights, l);
      } else {
        kr.selected_features = all;
      }
      // Selection sees eavesdropped rows only; probes shape the final substitute.
      blackbox::add_probes(*vic.oracle, vic.corpus, cfg.probe_copies, cfg.generator_budget, derive_seed(s, {4}));
      kr.oracle_queries = vic.oracle->query_log();
      vic.sub = substitute::train_substitute(vic.corpus, kr.selected_features, cfg.substitute_epochs, derive_seed(s, {3}));
      kr.substitute_curve = vic.sub->training_curve();
      kr.substitute_train_agreement = vic.sub->train_agreement();
      kr.substitute_test_agreement = vic.sub->holdout_agreement();
    }
    write_file_atomic(out_dir / "table1.csv", table1_csv(result));
    write_file_atomic(out_dir / "fig3.csv", fig3_csv(result));
    write_file_atomic(out_dir / "scan.csv", scan_csv(result));
  });

  std::vector<std::pair<std::size_t, camouflage::Generator>> snapshots;
  if (cfg.misidentify) {
    stage("misidentify", [&] {
      for (std::size_t v = 0; v < victims.size(); ++v) {
        auto& vic = victims[v];
        auto& kr = result.kinds[v];
        const std::string kname(learners::to_string(vic.kind));
        note(fmt::format("  misidentify {}", kname));
        const std::uint64_t s = seeds.at("generator." + kname);
        camouflage::GeneratorOptions go;
        go.budget = cfg.generator_budget;
        go.seed = derive_seed(s, {0});
        camouflage::Generator g0(pool, go);
        camouflage::GeneratorTrainOptions to;
        to.epochs = cfg.generator_epochs;
        to.learning_rate = cfg.generator_learning_rate;
        to.seed = derive_seed(s, {1});
        const bool record = cfg.defense && vic.kind == cfg.defense_kind;
        if (record) snapshots.emplace_back(0, g0);
        auto g = camouflage::train_generator(std::move(g0), *vic.sub, data.train, camouflage::AttackMode::misidentify(),
                                             to, [&](std::size_t e, const camouflage::Generator& cur) {
                                               if (record) snapshots.emplace_back(e + 1, cur);
                                             });
        const std::uint64_t es = seeds.at("attack_eval." + kname);
        const auto victim = camouflage::identifier(vic.model, pool);
        const auto mode = camouflage::AttackMode::misidentify();
        const auto on_test = camouflage::evaluate_attack(g, victim, data.test, mode, derive_seed(es, {0}));
        const auto on_train = camouflage::evaluate_attack(g, victim, data.train, mode, derive_seed(es, {1}));
        const auto on_sub = camouflage::evaluate_attack(g, camouflage::identifier(*vic.sub), data.test, mode,
                                                        derive_seed(es, {0}));
        kr.attacked = true;
        kr.attacked_test_rate = on_test.rate;
        kr.attacked_train_rate = on_train.rate;
        kr.substitute_attacked_rate = on_sub.rate;
        kr.generator_curve = g.training_curve();
        result.generators.push_back(std::move(g));
      }
      write_file_atomic(out_dir / "table2.csv", table2_csv(result));
    });
  }

  if (cfg.spoof) {
    stage("spoof", [&] {
      const auto& names = data.all.class_names();
      std::vector<std::optional<DeviceType>> type_of(names.size());
      std::set<DeviceType> present;
      for (std::size_t c = 0; c < names.size(); ++c)
        if ((type_of[c] = type_of_label(names[c]))) present.insert(*type_of[c]);
      if (present.size() != kDeviceTypes.size()) {
        result.warnings.emplace_back("class labels do not cover all four device types; spoofing grid skipped");
        write_file_atomic(out_dir / "table3.csv", table3_csv(result));
        return;
      }
      const auto pairs = spoof_pairs();
      for (std::size_t v = 0; v < victims.size(); ++v) {
        auto& vic = victims[v];
        const std::string kname(learners::to_string(vic.kind));
        note(fmt::format("  spoof grid {}", kname));
        const std::uint64_t s = seeds.at("spoof." + kname);
        const auto victim = camouflage::identifier(vic.model, pool);
        const auto corpus_y = vic.corpus.data.labels();
        for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
          const auto [src, dst] = pairs[pi];
          SpoofResult sr;
          sr.kind = vic.kind;
          sr.source = src;
          sr.target = dst;
          sr.target_class = spoof_target_class(vic.corpus, src, dst);

          std::vector<std::size_t> rows;
          for (std::size_t i = 0; i < corpus_y.size(); ++i)
            if (type_of[corpus_y[i]] == src) rows.push_back(i);
          Rng pick(derive_seed(s, {pi, 0}));
          std::shuffle(rows.begin(), rows.end(), pick);
          if (rows.size() > cfg.spoof_rows) rows.resize(cfg.spoof_rows);
          std::sort(rows.begin(), rows.end());
          const Dataset source_rows = data.train.select(rows);

          camouflage::GeneratorOptions go;
          go.budget = cfg.generator_budget;
          go.seed = derive_seed(s, {pi, 1});
          camouflage::GeneratorTrainOptions to;
          to.epochs = cfg.spoof_epochs;
          to.learning_rate = cfg.generator_learning_rate;
          to.seed = derive_seed(s, {pi, 2});
          const auto mode = camouflage::AttackMode::spoof(sr.target_class);
          const auto g = camouflage::train_generator(camouflage::Generator(pool, go), *vic.sub, source_rows, mode, to);

          std::vector<std::size_t> test_rows;
          for (std::size_t i = 0; i < test_y.size(); ++i)
            if (type_of[test_y[i]] == src) test_rows.push_back(i);
          const Dataset test_src = data.test.select(test_rows);
          const auto attacked = camouflage::manipulate_all(g, vectors_of(test_src), derive_seed(s, {pi, 3}));
          std::vector<ClassId> victim_types, sub_types;
          for (const auto& x : attacked) {
            victim_types.push_back(static_cast<ClassId>(type_of[victim(x)].value_or(src)));
            sub_types.push_back(static_cast<ClassId>(type_of[vic.sub->predict(x)].value_or(src)));
          }
          sr.rate = spoofing_rate(victim_types, static_cast<ClassId>(dst));
          sr.substitute_rate = spoofing_rate(sub_types, static_cast<ClassId>(dst));
          result.spoofing.push_back(sr);
        }
      }
      write_file_atomic(out_dir / "table3.csv", table3_csv(result));
    });
  }

  if (cfg.defense) {
    stage("defense", [&] {
      const std::uint64_t s = seeds.at("defense");
      const auto ids = profiler::draw_identities(n_classes, derive_seed(s, {0}));
      std::vector<profiler::ProfiledDevice> devices;
      for (std::size_t c = 0; c < n_classes; ++c) devices.push_back({ids[c], c});
      profiler::ChannelModel channel;
      channel.multipath_seed = derive_seed(s, {1});
      const auto train_sigs = profiler::synthesize_corpus(devices, channel, cfg.signatures_per_device, derive_seed(s, {2}));
      const auto test_sigs = profiler::synthesize_corpus(devices, channel, cfg.signatures_per_device, derive_seed(s, {3}));
      profiler::ProfilerOptions po;
      po.seed = derive_seed(s, {4});
      const auto clf = profiler::fit_profiler(train_sigs, data.all.class_names(), po);
      result.profiler_test_rate = profiler::profiler_rate(clf, test_sigs);

      const auto it = std::find(cfg.target_kinds.begin(), cfg.target_kinds.end(), cfg.defense_kind);
      const auto& vic = victims[static_cast<std::size_t>(it - cfg.target_kinds.begin())];
      profiler::DefenseScenario scenario;
      scenario.devices = devices;
      scenario.channel = channel;
      scenario.signatures_per_device = cfg.signatures_per_device;
      scenario.seed = derive_seed(s, {5});
      scenario.traffic = &data.test;
      scenario.traffic_victim = camouflage::identifier(vic.model, pool);
      result.defense = profiler::evaluate_defense(clf, snapshots, scenario);
      write_file_atomic(out_dir / "fig4.csv", fig4_csv(result));
    });
  }

  write_file_atomic(out_dir / "manifest.txt", manifest_text(cfg, seeds, "complete"));
  return result;
}

}  // namespace iotgan::harness
