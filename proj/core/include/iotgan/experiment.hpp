#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "iotgan/camouflage.hpp"
#include "iotgan/dataset.hpp"
#include "iotgan/learners/classifier.hpp"
#include "iotgan/profiler.hpp"
#include "iotgan/substitute.hpp"
#include "iotgan/synthetic.hpp"

namespace iotgan::harness {

struct ExperimentConfig {
  std::uint64_t seed = 42;
  std::size_t n_classes = 28;
  std::size_t rows_per_class = 500;
  std::string schema_path;  // empty: built-in schema
  std::string data_path;    // empty: synthetic data
  std::vector<std::string> immutable_features;  // empty: the schema's own mask
  std::vector<learners::ClassifierKind> target_kinds{std::begin(learners::kAllKinds), std::end(learners::kAllKinds)};
  std::vector<std::string> target_features;  // empty: default_target_features()
  double train_fraction = 0.8;
  std::size_t substitute_epochs = 60;
  std::size_t probe_copies = 2;  // perturbed oracle queries per eavesdropped row, radius generator_budget
  bool feature_scan = true;
  std::vector<std::size_t> scan_sizes{4, 6, 8, 10, 12, 16};
  std::size_t scan_epochs = 30;
  double selection_epsilon = 0.02;
  std::size_t generator_epochs = 40;
  double generator_learning_rate = 0.001;
  double generator_budget = 0.4;
  bool misidentify = true;
  bool spoof = true;
  std::size_t spoof_rows = 1000;
  std::size_t spoof_epochs = 30;
  bool defense = true;
  learners::ClassifierKind defense_kind = learners::ClassifierKind::NeuralNet;
  std::size_t signatures_per_device = 40;
  std::string output_dir = "out";

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

/// Setting names accepted by apply_setting(), in manifest order.
std::vector<std::string> setting_keys();
/// Sets one field from its text form. Lists are comma separated; booleans
/// are true/false. Throws ValidationError for unknown keys or bad values.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);
std::string setting_value(const ExperimentConfig& cfg, std::string_view key);

/// Flat key=value text of every setting except output_dir.
std::string canonical_settings(const ExperimentConfig& cfg);
/// FNV-1a of canonical_settings().
std::uint64_t config_hash(const ExperimentConfig& cfg);

/// Reads settings from key=value text, ignoring blank lines, '#' comments and
/// the derived.*, status and stage keys a run writes. A config_hash entry, if
/// present, must match the parsed settings.
ExperimentConfig parse_manifest(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_manifest(const std::filesystem::path& path, ExperimentConfig base = {});

/// Schema with the configured mask, data (generated or ingested) and the split.
struct PreparedData {
  FeatureSchema schema;
  Dataset all;
  Dataset train;
  Dataset test;
  std::vector<std::string> warnings;
};
PreparedData prepare_data(const ExperimentConfig& cfg);

/// Named seeds for every stage, all derived from cfg.seed.
std::map<std::string, std::uint64_t> stage_seeds(const ExperimentConfig& cfg);

struct KindResult {
  learners::ClassifierKind kind = learners::ClassifierKind::Knn;
  double target_train_rate = 0.0;
  double target_test_rate = 0.0;
  double substitute_train_agreement = 0.0;
  double substitute_test_agreement = 0.0;
  std::vector<double> substitute_curve;
  double full_pool_agreement = 0.0;
  std::vector<double> weights;
  std::vector<substitute::PerformanceGainPoint> scan;
  std::vector<std::size_t> selected_features;
  std::size_t oracle_queries = 0;

  bool attacked = false;
  double attacked_train_rate = 0.0;
  double attacked_test_rate = 0.0;
  double substitute_attacked_rate = 0.0;
  std::vector<double> generator_curve;
};

struct SpoofResult {
  learners::ClassifierKind kind = learners::ClassifierKind::Knn;
  DeviceType source = DeviceType::Camera;
  DeviceType target = DeviceType::Hub;
  ClassId target_class = 0;
  double rate = 0.0;             // victim, device-type level
  double substitute_rate = 0.0;  // substitute, device-type level
};

struct ExperimentResult {
  ExperimentConfig config;
  std::uint64_t hash = 0;
  std::map<std::string, std::uint64_t> seeds;
  std::vector<std::string> warnings;
  std::vector<KindResult> kinds;
  std::vector<SpoofResult> spoofing;
  std::vector<camouflage::Generator> generators;  // misidentify, one per attacked kind
  std::optional<profiler::DefenseReport> defense;
  double profiler_test_rate = 0.0;
};

using Progress = std::function<void(std::string_view)>;

/// Full pipeline into cfg.output_dir: table1.csv, table2.csv, table3.csv,
/// fig3.csv, fig4.csv, scan.csv and manifest.txt. Each file is written as
/// soon as its stage finishes. Throws StageFailure naming the stage; the
/// manifest then records the failed stage.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Progress& progress = {});

/// Ordered device-type pairs in report order: camera<->hub, camera<->health,
/// camera<->switch, hub<->health, hub<->switch, switch<->health; each pair as
/// (a => b) then (b => a).
std::vector<std::pair<DeviceType, DeviceType>> spoof_pairs();

/// Class of type `target` whose corpus centroid lies nearest the centroid of
/// the `source` rows. Labels are read from the corpus (oracle answers).
ClassId spoof_target_class(const blackbox::EavesdropCorpus& corpus, DeviceType source, DeviceType target);

}  // namespace iotgan::harness
