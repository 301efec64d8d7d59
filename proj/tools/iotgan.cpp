// iotgan: command line front end for the traffic camouflage experiments.

#include <cstdio>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <string>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "iotgan/blackbox.hpp"
#include "iotgan/camouflage.hpp"
#include "iotgan/csv.hpp"
#include "iotgan/error.hpp"
#include "iotgan/experiment.hpp"
#include "iotgan/io.hpp"
#include "iotgan/learners/classifier.hpp"
#include "iotgan/metrics.hpp"
#include "iotgan/profiler.hpp"
#include "iotgan/random.hpp"
#include "iotgan/report.hpp"
#include "iotgan/substitute.hpp"
#include "iotgan/synthetic.hpp"

namespace {

using namespace iotgan;
using harness::ExperimentConfig;

enum Exit { kOk = 0, kValidation = 1, kStage = 2, kIo = 3 };

struct DataArgs {
  std::string data;
  std::string schema;
  std::uint64_t seed = 42;
  double train_fraction = 0.8;
};

void add_data_args(CLI::App* cmd, DataArgs& a) {
  cmd->add_option("--data", a.data, "Dataset CSV")->required();
  cmd->add_option("--schema", a.schema, "Schema CSV (default: built-in)");
  cmd->add_option("--seed", a.seed, "Base seed")->capture_default_str();
  cmd->add_option("--train-fraction", a.train_fraction, "Train share of the split")->capture_default_str();
}

struct Split {
  Dataset train;
  Dataset test;
};

FeatureSchema schema_of(const DataArgs& a) {
  return a.schema.empty() ? harness::default_schema() : harness::load_schema(a.schema);
}

Split load_split(const DataArgs& a) {
  ExperimentConfig cfg;
  cfg.seed = a.seed;
  const Dataset ds = harness::ingest_csv(a.data, schema_of(a));
  auto [train, test] = split_dataset(ds, a.train_fraction, harness::stage_seeds(cfg).at("split"));
  return {std::move(train), std::move(test)};
}

double rate_of(const learners::Classifier& m, const Dataset& ds) {
  const Dataset p = ds.project(m.schema());
  return identification_rate(ConfusionCounts::tally(ds.labels(), learners::predict_all(m, p), ds.n_classes()));
}

std::vector<FeatureVector> vectors_of(const Dataset& ds) {
  std::vector<FeatureVector> out;
  for (const auto& r : ds.rows()) out.push_back(r.x);
  return out;
}

blackbox::EavesdropCorpus collect(const std::shared_ptr<const learners::Classifier>& model, const Dataset& traffic) {
  blackbox::Oracle oracle(model, traffic.schema());
  return oracle.collect(vectors_of(traffic));
}

struct ProbeArgs {
  std::size_t copies = 2;
  double radius = 0.4;
};

void add_probe_args(CLI::App* cmd, ProbeArgs& a) {
  cmd->add_option("--probes", a.copies, "Perturbed oracle queries per eavesdropped row")->capture_default_str();
  cmd->add_option("--probe-radius", a.radius, "Probe step per feature, fraction of its range")->capture_default_str();
}



int run_cli(int argc, char** argv) {
  CLI::App app{"Adversarial traffic camouflage against IoT device identifiers"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic device-traffic benchmark");
  std::string gen_out, gen_schema_out;
  std::size_t gen_classes = 28, gen_rows = 500;
  std::uint64_t gen_seed = 42;
  gen->add_option("--out", gen_out, "Output CSV")->required();
  gen->add_option("--classes", gen_classes, "Number of device classes")->capture_default_str();
  gen->add_option("--rows", gen_rows, "Rows per class")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Base seed")->capture_default_str();
  gen->add_option("--schema-out", gen_schema_out, "Also write the schema CSV here");
  gen->callback([&] {
    ExperimentConfig cfg;
    cfg.seed = gen_seed;
    cfg.n_classes = gen_classes;
    cfg.rows_per_class = gen_rows;
    const auto prepared = harness::prepare_data(cfg);
    for (const auto& w : prepared.warnings) fmt::print(stderr, "warning: {}\n", w);
    harness::write_dataset_csv(prepared.all, gen_out);
    if (!gen_schema_out.empty()) write_file_atomic(gen_schema_out, harness::schema_to_csv(prepared.schema));
    fmt::print("wrote {} rows, {} classes, {} features to {}\n", prepared.all.size(), prepared.all.n_classes(),
               prepared.schema.size(), gen_out);
  });

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate a dataset CSV against a schema");
  DataArgs ingest_args;
  ingest->add_option("--data", ingest_args.data, "Dataset CSV")->required();
  ingest->add_option("--schema", ingest_args.schema, "Schema CSV (default: built-in)");
  ingest->callback([&] {
    const Dataset ds = harness::ingest_csv(ingest_args.data, schema_of(ingest_args));
    fmt::print("{} rows, {} classes, {} features ({} mutable)\n", ds.size(), ds.n_classes(), ds.schema().size(),
               ds.schema().mutable_count());
    const auto hist = ds.class_histogram();
    for (std::size_t c = 0; c < hist.size(); ++c) fmt::print("  {:<16} {}\n", ds.class_names()[c], hist[c]);
  });

  // train-target
  auto* tt = app.add_subcommand("train-target", "Fit a deployed identifier");
  DataArgs tt_args;
  std::string tt_kind = "neural_net", tt_out;
  std::vector<std::string> tt_features;
  add_data_args(tt, tt_args);
  tt->add_option("--kind", tt_kind, "knn, decision_tree, random_forest, svm or neural_net")->capture_default_str();
  tt->add_option("--features", tt_features, "Feature names the identifier sees (default: built-in subset)")
      ->delimiter(',');
  tt->add_option("--out", tt_out, "Model JSON")->required();
  tt->callback([&] {
    const auto split = load_split(tt_args);
    const auto names = tt_features.empty() ? harness::default_target_features() : tt_features;
    std::vector<std::size_t> cols;
    for (const auto& n : names) {
      auto i = split.train.schema().index_of(n);
      if (!i) throw ValidationError(fmt::format("feature '{}' is not in the schema", n));
      cols.push_back(*i);
    }
    const auto sub_schema = split.train.schema().subset(cols);
    learners::Hyperparams hp;
    hp.seed = derive_seed(tt_args.seed, {3});
    const auto kind = learners::parse_kind(tt_kind);
    const auto model = learners::fit(kind, split.train.project(sub_schema), hp);
    learners::save_classifier(model, std::filesystem::path(tt_out));
    fmt::print("{}: train {:.4f} test {:.4f}\n", learners::display_name(kind), rate_of(model, split.train),
               rate_of(model, split.test));
  });

  // train-substitute
  auto* ts = app.add_subcommand("train-substitute", "Fit a substitute from oracle answers");
  DataArgs ts_args;
  std::string ts_target, ts_out;
  std::size_t ts_epochs = 60, ts_top = 0;
  add_data_args(ts, ts_args);
  ts->add_option("--target", ts_target, "Target model JSON (queried as a label-only oracle)")->required();
  ts->add_option("--out", ts_out, "Substitute JSON")->required();
  ts->add_option("--epochs", ts_epochs, "Training epochs")->capture_default_str();
  ts->add_option("--top", ts_top, "Keep the top-L weighted features (0: whole pool)")->capture_default_str();
  ProbeArgs ts_probes;
  add_probe_args(ts, ts_probes);
  ts->callback([&] {
    const auto split = load_split(ts_args);
    auto model = std::make_shared<const learners::Classifier>(learners::load_classifier(std::filesystem::path(ts_target)));
    const blackbox::Oracle oracle(model, split.train.schema());
    auto corpus = oracle.collect(vectors_of(split.train));
    std::vector<std::size_t> cols(corpus.schema().size());
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    if (ts_top > 0) {
      const auto full = substitute::train_substitute(corpus, cols, ts_epochs, derive_seed(ts_args.seed, {4, 0}));
      cols = substitute::top_weighted(substitute::feature_weights(corpus, full, derive_seed(ts_args.seed, {4, 1})), ts_top);
    }
    blackbox::add_probes(oracle, corpus, ts_probes.copies, ts_probes.radius, derive_seed(ts_args.seed, {4, 4}));
    const auto sub = substitute::train_substitute(corpus, cols, ts_epochs, derive_seed(ts_args.seed, {4, 3}));
    substitute::save_substitute(sub, ts_out);
    fmt::print("substitute on {} features: train agreement {:.4f}, held-out agreement {:.4f}\n",
               sub.pool().selected.size(), sub.train_agreement(), sub.holdout_agreement());
  });

  // scan-features
  auto* sf = app.add_subcommand("scan-features", "Rank features and scan subset sizes");
  DataArgs sf_args;
  std::string sf_target, sf_out;
  std::vector<std::size_t> sf_sizes{4, 6, 8, 10, 12, 16};
  std::size_t sf_epochs = 30;
  double sf_eps = 0.02;
  add_data_args(sf, sf_args);
  sf->add_option("--target", sf_target, "Target model JSON")->required();
  sf->add_option("--out", sf_out, "Scan CSV");
  sf->add_option("--sizes", sf_sizes, "Subset sizes")->delimiter(',')->capture_default_str();
  sf->add_option("--epochs", sf_epochs, "Epochs per scanned substitute")->capture_default_str();
  sf->add_option("--epsilon", sf_eps, "Allowed agreement loss vs. the full pool")->capture_default_str();
  sf->callback([&] {
    const auto split = load_split(sf_args);
    auto model = std::make_shared<const learners::Classifier>(learners::load_classifier(std::filesystem::path(sf_target)));
    const auto corpus = collect(model, split.train);
    std::vector<std::size_t> all(corpus.schema().size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto full = substitute::train_substitute(corpus, all, sf_epochs, derive_seed(sf_args.seed, {4, 0}));
    const auto w = substitute::feature_weights(corpus, full, derive_seed(sf_args.seed, {4, 1}));
    substitute::ScanOptions so;
    so.epochs = sf_epochs;
    so.seed = derive_seed(sf_args.seed, {4, 2});
    const auto scan = substitute::performance_gain_scan(corpus, w, sf_sizes, so);
    const auto l = substitute::select_subset(scan, {full.holdout_agreement(), sf_eps});
    const std::string csv = substitute::scan_to_csv(scan);
    if (!sf_out.empty()) write_file_atomic(sf_out, csv);
    fmt::print("{}full pool agreement {:.4f}; selected L = {}\n", csv, full.holdout_agreement(), l);
    for (auto i : substitute::top_weighted(w, l)) fmt::print("  {} ({:.4f})\n", corpus.schema()[i].name, w[i]);
  });

  // attack / spoof share their options
  struct AttackArgs {
    DataArgs data;
    std::string target, substitute, out;
    std::size_t epochs = 40;
    double lr = 0.001;
    double budget = 0.4;
  };
  auto add_attack_args = [](CLI::App* cmd, AttackArgs& a) {
    add_data_args(cmd, a.data);
    cmd->add_option("--target", a.target, "Victim model JSON")->required();
    cmd->add_option("--substitute", a.substitute, "Frozen substitute JSON")->required();
    cmd->add_option("--out", a.out, "Generator JSON");
    cmd->add_option("--epochs", a.epochs, "Generator epochs")->capture_default_str();
    cmd->add_option("--lr", a.lr, "Generator learning rate")->capture_default_str();
    cmd->add_option("--budget", a.budget, "Largest change per feature, fraction of its range")->capture_default_str();
  };

  auto* atk = app.add_subcommand("attack", "Train a misidentification generator and attack the victim");
  AttackArgs atk_args;
  add_attack_args(atk, atk_args);
  atk->callback([&] {
    const auto split = load_split(atk_args.data);
    auto victim_model =
        std::make_shared<const learners::Classifier>(learners::load_classifier(std::filesystem::path(atk_args.target)));
    const auto sub = substitute::load_substitute(atk_args.substitute);
    camouflage::GeneratorOptions go;
    go.budget = atk_args.budget;
    go.seed = derive_seed(atk_args.data.seed, {5, 0});
    camouflage::GeneratorTrainOptions to;
    to.epochs = atk_args.epochs;
    to.learning_rate = atk_args.lr;
    to.seed = derive_seed(atk_args.data.seed, {5, 1});
    const auto mode = camouflage::AttackMode::misidentify();
    const auto g = camouflage::train_generator(camouflage::Generator(split.train.schema(), go), sub, split.train, mode, to);
    if (!atk_args.out.empty()) camouflage::save_generator(g, atk_args.out);
    const auto victim = camouflage::identifier(victim_model, split.test.schema());
    const auto rep = camouflage::evaluate_attack(g, victim, split.test, mode, derive_seed(atk_args.data.seed, {6}));
    const auto on_sub =
        camouflage::evaluate_attack(g, camouflage::identifier(sub), split.test, mode, derive_seed(atk_args.data.seed, {6}));
    fmt::print("epochs run {}; victim identification {:.4f} -> {:.4f}; substitute {:.4f} -> {:.4f}\n",
               g.training_curve().size(), rep.clean_rate, rep.rate, on_sub.clean_rate, on_sub.rate);
  });

  auto* sp = app.add_subcommand("spoof", "Train an identity-spoofing generator between device types");
  AttackArgs sp_args;
  std::string sp_from = "camera", sp_to = "hub";
  add_attack_args(sp, sp_args);
  sp->add_option("--from", sp_from, "Source device type")->capture_default_str();
  sp->add_option("--to", sp_to, "Destination device type")->capture_default_str();
  sp->callback([&] {
    const auto split = load_split(sp_args.data);
    auto victim_model =
        std::make_shared<const learners::Classifier>(learners::load_classifier(std::filesystem::path(sp_args.target)));
    const auto sub = substitute::load_substitute(sp_args.substitute);
    const auto from = harness::parse_device_type(sp_from);
    const auto to_type = harness::parse_device_type(sp_to);
    const auto corpus = collect(victim_model, split.train);
    const ClassId target = harness::spoof_target_class(corpus, from, to_type);
    const auto& names = split.train.class_names();
    auto rows_of_type = [&](const Dataset& ds) {
      std::vector<std::size_t> rows;
      const auto y = ds.labels();
      for (std::size_t i = 0; i < y.size(); ++i)
        if (harness::device_type_of(names[y[i]]) == from) rows.push_back(i);
      return ds.select(rows);
    };
    camouflage::GeneratorOptions go;
    go.budget = sp_args.budget;
    go.seed = derive_seed(sp_args.data.seed, {7, 0});
    camouflage::GeneratorTrainOptions to;
    to.epochs = sp_args.epochs;
    to.learning_rate = sp_args.lr;
    to.seed = derive_seed(sp_args.data.seed, {7, 1});
    const auto g = camouflage::train_generator(camouflage::Generator(split.train.schema(), go), sub,
                                               rows_of_type(split.train), camouflage::AttackMode::spoof(target), to);
    if (!sp_args.out.empty()) camouflage::save_generator(g, sp_args.out);
    const auto victim = camouflage::identifier(victim_model, split.test.schema());
    const auto attacked = camouflage::manipulate_all(g, vectors_of(rows_of_type(split.test)), derive_seed(sp_args.data.seed, {8}));
    std::size_t hits = 0;
    for (const auto& x : attacked) hits += harness::device_type_of(names[victim(x)]) == to_type;
    fmt::print("{} => {} (target class {}): spoofing rate {:.4f} over {} rows\n", sp_from, sp_to, names[target],
               attacked.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(attacked.size()), attacked.size());
  });

  // defend
  auto* df = app.add_subcommand("defend", "Evaluate device profiling while a generator manipulates traffic");
  DataArgs df_args;
  std::string df_target, df_generator, df_out;
  std::size_t df_sigs = 40;
  add_data_args(df, df_args);
  df->add_option("--target", df_target, "Traffic identifier JSON")->required();
  df->add_option("--generator", df_generator, "Generator JSON")->required();
  df->add_option("--signatures", df_sigs, "Signatures per device")->capture_default_str();
  df->add_option("--out", df_out, "CSV with the untrained and the given generator");
  df->callback([&] {
    const auto split = load_split(df_args);
    auto model = std::make_shared<const learners::Classifier>(learners::load_classifier(std::filesystem::path(df_target)));
    auto g = camouflage::load_generator(df_generator);
    const std::size_t n = split.train.n_classes();
    const auto ids = profiler::draw_identities(n, derive_seed(df_args.seed, {9, 0}));
    std::vector<profiler::ProfiledDevice> devices;
    for (std::size_t c = 0; c < n; ++c) devices.push_back({ids[c], c});
    profiler::ChannelModel channel;
    channel.multipath_seed = derive_seed(df_args.seed, {9, 1});
    const auto sigs = profiler::synthesize_corpus(devices, channel, df_sigs, derive_seed(df_args.seed, {9, 2}));
    profiler::ProfilerOptions po;
    po.seed = derive_seed(df_args.seed, {9, 4});
    const auto clf = profiler::fit_profiler(sigs, split.train.class_names(), po);
    profiler::DefenseScenario sc;
    sc.devices = devices;
    sc.channel = channel;
    sc.signatures_per_device = df_sigs;
    sc.seed = derive_seed(df_args.seed, {9, 5});
    sc.traffic = &split.test;
    sc.traffic_victim = camouflage::identifier(model, split.test.schema());
    std::vector<std::pair<std::size_t, camouflage::Generator>> snaps;
    camouflage::Generator untrained(g.schema(), camouflage::GeneratorOptions{{64, 64}, g.budget(), 0});
    snaps.emplace_back(0, untrained);
    snaps.emplace_back(g.training_curve().size(), g);
    const auto report = profiler::evaluate_defense(clf, snaps, sc);
    std::string csv = "epoch,traffic_identification_rate,profiling_clean_rate,profiling_attacked_rate,orthogonal\n";
    for (const auto& r : report.rounds)
      csv += fmt::format("{},{:.6f},{:.6f},{:.6f},{}\n", r.epoch, r.traffic_rate, r.clean_rate, r.attacked_rate,
                         r.clean_hash == r.attacked_hash ? 1 : 0);
    if (!df_out.empty()) write_file_atomic(df_out, csv);
    fmt::print("{}", csv);
  });

  // report
  auto* rp = app.add_subcommand("report", "Print the report tables of a run directory");
  std::string rp_dir = "out";
  rp->add_option("--dir", rp_dir, "Run output directory")->capture_default_str();
  rp->callback([&] { fmt::print("{}", harness::render_report(rp_dir)); });

  // run: every setting is a flag; --config supplies a key=value file.
  auto* run = app.add_subcommand("run", "Run the full pipeline");
  std::string run_config;
  run->add_option("--config", run_config, "key=value settings file (a previous manifest.txt works)");
  bool quiet = false;
  run->add_flag("--quiet", quiet, "No progress output");
  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option*> flag_options;
  const ExperimentConfig defaults;
  for (const auto& key : harness::setting_keys()) {
    std::string flag = key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    flag_options[key] =
        run->add_option("--" + flag, flag_values[key], fmt::format("default: {}", harness::setting_value(defaults, key)));
  }
  run->callback([&] {
    ExperimentConfig cfg = run_config.empty() ? ExperimentConfig{} : harness::load_manifest(run_config);
    for (const auto& [key, opt] : flag_options)
      if (opt->count() > 0) harness::apply_setting(cfg, key, flag_values[key]);
    harness::Progress progress;
    if (!quiet) progress = [](std::string_view m) { fmt::print(stderr, "{}\n", m); };
    const auto result = harness::run_experiment(cfg, progress);
    for (const auto& w : result.warnings) fmt::print(stderr, "warning: {}\n", w);
    fmt::print("{}", harness::render_report(cfg.output_dir));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const iotgan::StageFailure& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kStage;
  } catch (const iotgan::ValidationError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kValidation;
  } catch (const iotgan::IoError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kIo;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kStage;
  }
}
