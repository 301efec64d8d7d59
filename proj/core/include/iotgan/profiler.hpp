#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "iotgan/camouflage.hpp"
#include "iotgan/channel.hpp"
#include "iotgan/dataset.hpp"
#include "iotgan/learners/decision_tree.hpp"
#include "iotgan/learners/mlp.hpp"

namespace iotgan::profiler {

inline constexpr std::size_t kMinSignaturesPerClass = 10;

struct LabelledSignature {
  RfSignature signature;
  ClassId label = 0;
  std::uint64_t device_id = 0;
};

struct ProfilerOptions {
  std::size_t tree_depth = 3;
  std::vector<std::size_t> hidden{64};
  std::size_t epochs = 80;
  std::size_t batch_size = 32;
  double learning_rate = 3e-3;
  std::uint64_t seed = 0;
};

/// Column means and standard deviations; zero deviation maps to 1.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

/// Stage 1: a shallow tree over the four profiled features routes each
/// signature to a group of classes. Stage 2: one network per group over the
/// profiled features followed by the CSI vector.
class MultiStageClassifier {
 public:
  struct Group {
    std::vector<ClassId> classes;  // ascending
    learners::Mlp net;             // outputs follow `classes`
  };

  MultiStageClassifier(std::vector<std::string> class_names, std::size_t csi_width, Standardizer stage1_scale,
                       learners::DecisionTree tree, std::vector<std::size_t> leaf_group, Standardizer stage2_scale,
                       std::vector<Group> groups);

  const std::vector<std::string>& class_names() const noexcept { return class_names_; }
  std::size_t n_classes() const noexcept { return class_names_.size(); }
  std::size_t csi_width() const noexcept { return csi_width_; }
  const learners::DecisionTree& tree() const noexcept { return tree_; }
  const std::vector<Group>& groups() const noexcept { return groups_; }
  /// Group index for each tree node id; only leaf entries are meaningful.
  const std::vector<std::size_t>& leaf_group() const noexcept { return leaf_group_; }

  /// Group a signature is routed to.
  std::size_t route(const RfSignature& s) const;
  /// Class and stage-2 score in (0, 1).
  std::pair<ClassId, double> identify(const RfSignature& s) const;

 private:
  Eigen::RowVectorXd stage2_input(const RfSignature& s) const;

  std::vector<std::string> class_names_;
  std::size_t csi_width_;
  Standardizer stage1_scale_;
  learners::DecisionTree tree_;
  std::vector<std::size_t> leaf_group_;
  Standardizer stage2_scale_;
  std::vector<Group> groups_;
};

/// Throws ValidationError when a class has fewer than 10 signatures, labels
/// exceed the class list, or CSI widths differ.
MultiStageClassifier fit_profiler(std::span<const LabelledSignature> data, std::vector<std::string> class_names,
                                  const ProfilerOptions& options = {});

std::pair<DeviceClass, double> identify(const MultiStageClassifier& c, const RfSignature& s);

/// Fraction of signatures identified as their own label.
double profiler_rate(const MultiStageClassifier& c, std::span<const LabelledSignature> data);

/// One deployed device: its hardware and the class it is known as.
struct ProfiledDevice {
  HardwareIdentity identity;
  ClassId label = 0;
};

/// Signatures for every device, `per_device` each, noise seeds derived from `seed`.
std::vector<LabelledSignature> synthesize_corpus(std::span<const ProfiledDevice> devices, const ChannelModel& model,
                                                 std::size_t per_device, std::uint64_t seed);

struct DefenseScenario {
  std::vector<ProfiledDevice> devices;
  ChannelModel channel;
  std::size_t signatures_per_device = 20;
  std::uint64_t seed = 0;
  /// Traffic observed from the same devices; labels match the device classes.
  const Dataset* traffic = nullptr;
  /// Traffic-based identifier the generator is attacking.
  camouflage::Identifier traffic_victim;
};

struct DefenseRound {
  std::size_t epoch = 0;
  double traffic_rate = 0.0;      // traffic identifier under attack
  double clean_rate = 0.0;        // profiler without attack
  double attacked_rate = 0.0;     // profiler while traffic is manipulated
  std::uint64_t clean_hash = 0;   // signature stream without attack
  std::uint64_t attacked_hash = 0;
};

struct DefenseReport {
  std::vector<DefenseRound> rounds;
  bool orthogonal() const noexcept;
};

/// For each (epoch, generator) snapshot, manipulates the scenario traffic and
/// re-synthesizes signatures from the unchanged identities.
DefenseReport evaluate_defense(const MultiStageClassifier& c,
                               std::span<const std::pair<std::size_t, camouflage::Generator>> snapshots,
                               const DefenseScenario& scenario);

/// Header: device_id,class,amplitude_attenuation,phase_shift,frequency_offset,arrival_angle,csi_0..csi_{C-1}
std::string signatures_to_csv(std::span<const LabelledSignature> data, std::span<const std::string> class_names);
/// Throws ParseError with the line and column of the first malformed cell.
std::vector<LabelledSignature> signatures_from_csv(const std::string& text, std::span<const std::string> class_names);

}  // namespace iotgan::profiler
