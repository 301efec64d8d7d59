#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "iotgan/blackbox.hpp"
#include "iotgan/learners/mlp.hpp"

namespace iotgan::substitute {

/// The attacker's candidate features, their importance weights and the
/// subset currently fed to the substitute network.
struct FeaturePool {
  FeatureSchema schema;
  std::vector<double> weights;         // one per pool feature; empty when unweighted
  std::vector<std::size_t> selected;   // indices into schema, ascending

  static FeaturePool full(const FeatureSchema& schema);
  /// Top-L features by weight, ties to the lower index. Requires 1 <= L <= K.
  static FeaturePool top(const FeatureSchema& schema, std::vector<double> weights, std::size_t l);
};

/// Indices of the L largest weights (ties to the lower index), returned ascending.
std::vector<std::size_t> top_weighted(std::span<const double> weights, std::size_t l);

struct SubstituteOptions {
  std::vector<std::size_t> hidden{64, 64};
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double train_fraction = 0.8;
};

/// MLP fitted to mimic the oracle on the selected pool features.
/// Inputs are full pool vectors; the model selects and normalizes internally.
class SubstituteModel {
 public:
  SubstituteModel(learners::Mlp net, FeaturePool pool, std::vector<std::string> class_names);

  const learners::Mlp& net() const noexcept { return net_; }
  const FeaturePool& pool() const noexcept { return pool_; }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }
  std::size_t n_classes() const noexcept { return class_names_.size(); }

  /// Held-out agreement with the oracle after each training epoch.
  const std::vector<double>& training_curve() const noexcept { return curve_; }
  double holdout_agreement() const noexcept { return curve_.empty() ? 0.0 : curve_.back(); }
  double train_agreement() const noexcept { return train_agreement_; }
  /// Corpus rows withheld from training.
  const std::vector<std::size_t>& holdout_rows() const noexcept { return holdout_; }

  /// Frozen models are read-only inputs to generator training.
  bool frozen() const noexcept { return frozen_; }
  void freeze() noexcept { frozen_ = true; }

  /// Selected columns of a schema-normalized pool matrix (rows x K).
  Eigen::MatrixXd select_columns(const Eigen::MatrixXd& pool_normalized) const;
  /// Expands a gradient over the selected inputs back to all K pool columns.
  Eigen::MatrixXd scatter_columns(const Eigen::MatrixXd& selected_grad) const;

  std::vector<double> scores(const FeatureVector& x) const;
  ClassId predict(const FeatureVector& x) const;
  std::vector<ClassId> predict_normalized(const Eigen::MatrixXd& pool_normalized) const;

 private:
  friend SubstituteModel train_substitute(const blackbox::EavesdropCorpus&, std::span<const std::size_t>,
                                          std::size_t, std::uint64_t, const SubstituteOptions&);
  friend SubstituteModel load_substitute(const std::filesystem::path&);

  learners::Mlp net_;
  FeaturePool pool_;
  std::vector<std::string> class_names_;
  std::vector<double> curve_;
  double train_agreement_ = 0.0;
  std::vector<std::size_t> holdout_;
  bool frozen_ = false;
};

/// Fits the substitute on `subset` of the corpus features against one-hot
/// oracle labels, with an internal stratified train/held-out split. Probes
/// join training when their origin row does; held-out rows are data rows only.
/// Returns a frozen model. Throws ValidationError for epochs == 0 or a bad
/// subset, DegenerateTrainingError for a single-label corpus.
SubstituteModel train_substitute(const blackbox::EavesdropCorpus& corpus, std::span<const std::size_t> subset,
                                 std::size_t epochs, std::uint64_t seed, const SubstituteOptions& options = {});

/// Permutation importance against a substitute trained on the full pool:
/// mean held-out agreement drop when one column is shuffled, floored at 0.
std::vector<double> feature_weights(const blackbox::EavesdropCorpus& corpus, const SubstituteModel& base,
                                    std::uint64_t seed, std::size_t repetitions = 10);

struct PerformanceGainPoint {
  std::size_t subset_size = 0;
  double agreement = 0.0;   // held-out agreement with the oracle
  double overhead_s = 0.0;  // median wall time to identify the probe set
  std::optional<double> gain;  // empty when undefined

  bool undefined() const noexcept { return !gain.has_value(); }
};

/// ((r_c - r_p)/r_c - (c_c - c_p)/c_c) / ((c_c - c_p)/c_c); empty when
/// r_c == 0, c_c == 0, c_c == c_p, or any input is non-finite.
std::optional<double> performance_gain(double r_c, double r_p, double c_c, double c_p) noexcept;

struct ScanOptions {
  std::size_t epochs = 30;
  std::uint64_t seed = 0;
  std::size_t probe_size = 1000;
  std::size_t timing_runs = 5;
  SubstituteOptions substitute;
};

/// Retrains a substitute on the top-L features for each L and measures
/// agreement and overhead. Timing runs are serial. Throws ValidationError
/// when `l_values` is empty, unsorted or out of [1, K].
std::vector<PerformanceGainPoint> performance_gain_scan(const blackbox::EavesdropCorpus& corpus,
                                                        std::span<const double> weights,
                                                        std::span<const std::size_t> l_values,
                                                        const ScanOptions& options = {});

struct SelectionPolicy {
  double full_pool_agreement = 1.0;
  double epsilon = 0.02;
};

/// Smallest L whose agreement is within epsilon of the full pool; if none
/// qualifies, the L with the highest agreement. Throws on an empty scan.
std::size_t select_subset(std::span<const PerformanceGainPoint> scan, const SelectionPolicy& policy);

/// CSV with columns L,agreement,overhead_s,gain,undefined_flag.
std::string scan_to_csv(std::span<const PerformanceGainPoint> scan);

void save_substitute(const SubstituteModel& model, const std::filesystem::path& path);
/// Loaded models are frozen.
SubstituteModel load_substitute(const std::filesystem::path& path);

}  // namespace iotgan::substitute
