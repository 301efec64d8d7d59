#include "iotgan/profiler.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include <fmt/core.h>

#include "iotgan/error.hpp"
#include "iotgan/metrics.hpp"
#include "iotgan/random.hpp"

namespace iotgan::profiler {

namespace {

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

Eigen::RowVectorXd profiled_row(const RfSignature& s) {
  const auto p = s.profiled();
  Eigen::RowVectorXd r(idx(kProfiledFeatures));
  for (std::size_t i = 0; i < kProfiledFeatures; ++i) r(idx(i)) = p[i];
  return r;
}

Eigen::RowVectorXd full_row(const RfSignature& s) {
  Eigen::RowVectorXd r(idx(kProfiledFeatures + s.csi.size()));
  r.head(idx(kProfiledFeatures)) = profiled_row(s);
  for (std::size_t k = 0; k < s.csi.size(); ++k) r(idx(kProfiledFeatures + k)) = s.csi[k];
  return r;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<RfSignature> stream_of(const std::vector<LabelledSignature>& data) {
  std::vector<RfSignature> out;
  out.reserve(data.size());
  for (const auto& d : data) out.push_back(d.signature);
  return out;
}

}  // namespace

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  if (x.rows() == 0) throw ValidationError("cannot standardize zero rows");
  Standardizer s;
  s.mean = x.colwise().mean();
  const Eigen::MatrixXd centred = x.rowwise() - s.mean;
  s.scale = (centred.array().square().colwise().sum() / static_cast<double>(x.rows())).sqrt().matrix();
  for (Eigen::Index c = 0; c < s.scale.size(); ++c)
    if (!(s.scale(c) > 0.0)) s.scale(c) = 1.0;
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  return ((x.rowwise() - mean).array().rowwise() / scale.array()).matrix();
}

MultiStageClassifier::MultiStageClassifier(std::vector<std::string> class_names, std::size_t csi_width,
                                           Standardizer stage1_scale, learners::DecisionTree tree,
                                           std::vector<std::size_t> leaf_group, Standardizer stage2_scale,
                                           std::vector<Group> groups)
    : class_names_(std::move(class_names)),
      csi_width_(csi_width),
      stage1_scale_(std::move(stage1_scale)),
      tree_(std::move(tree)),
      leaf_group_(std::move(leaf_group)),
      stage2_scale_(std::move(stage2_scale)),
      groups_(std::move(groups)) {
  if (leaf_group_.size() != tree_.nodes().size()) throw ValidationError("routing table does not match the tree");
  std::vector<int> seen(class_names_.size(), 0);
  for (const auto& g : groups_) {
    if (g.classes.empty() || g.net.output_size() != g.classes.size() ||
        g.net.input_size() != kProfiledFeatures + csi_width_)
      throw ValidationError("stage-2 network shape does not match its group");
    for (ClassId c : g.classes) {
      if (c >= seen.size()) throw ValidationError("stage-2 group names an unknown class");
      ++seen[c];
    }
  }
  for (std::size_t n = 0; n < tree_.nodes().size(); ++n)
    if (tree_.nodes()[n].is_leaf() && leaf_group_[n] >= groups_.size())
      throw ValidationError("tree leaf routes to a missing group");
  if (std::any_of(seen.begin(), seen.end(), [](int v) { return v != 1; }))
    throw ValidationError("stage-2 groups must partition the classes");
}

std::size_t MultiStageClassifier::route(const RfSignature& s) const {
  const Eigen::RowVectorXd z = stage1_scale_.apply(profiled_row(s));
  return leaf_group_[tree_.leaf_of(z)];
}

Eigen::RowVectorXd MultiStageClassifier::stage2_input(const RfSignature& s) const {
  if (s.csi.size() != csi_width_)
    throw ValidationError(fmt::format("signature has {} CSI values, classifier expects {}", s.csi.size(), csi_width_));
  return stage2_scale_.apply(full_row(s));
}

std::pair<ClassId, double> MultiStageClassifier::identify(const RfSignature& s) const {
  const Eigen::RowVectorXd in = stage2_input(s);
  const Group& g = groups_[route(s)];
  const Eigen::VectorXd out = g.net.forward(Eigen::VectorXd(in.transpose()));
  const std::size_t best = learners::argmax_lowest(std::span<const double>(out.data(), static_cast<std::size_t>(out.size())));
  const double score = std::clamp(out(idx(best)), std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
  return {g.classes[best], score};
}

MultiStageClassifier fit_profiler(std::span<const LabelledSignature> data, std::vector<std::string> class_names,
                                  const ProfilerOptions& options) {
  const std::size_t n_classes = class_names.size();
  if (n_classes == 0) throw ValidationError("profiler needs at least one class");
  if (data.empty()) throw ValidationError("profiler needs training signatures");
  if (options.tree_depth == 0 || options.epochs == 0 || options.batch_size == 0)
    throw ValidationError("tree depth, epochs and batch size must be positive");
  const std::size_t csi_width = data.front().signature.csi.size();
  std::vector<std::size_t> counts(n_classes, 0);
  for (const auto& d : data) {
    if (d.label >= n_classes) throw ValidationError(fmt::format("signature label {} not below {}", d.label, n_classes));
    if (d.signature.csi.size() != csi_width) throw ValidationError("signatures have different CSI widths");
    ++counts[d.label];
  }
  for (std::size_t c = 0; c < n_classes; ++c)
    if (counts[c] < kMinSignaturesPerClass)
      throw ValidationError(fmt::format("class '{}' has {} signatures, needs at least {}", class_names[c], counts[c],
                                        kMinSignaturesPerClass));

  const auto n = idx(data.size());
  Eigen::MatrixXd x1(n, idx(kProfiledFeatures)), x2(n, idx(kProfiledFeatures + csi_width));
  std::vector<ClassId> y(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    x1.row(idx(i)) = profiled_row(data[i].signature);
    x2.row(idx(i)) = full_row(data[i].signature);
    y[i] = data[i].label;
  }
  Standardizer s1 = Standardizer::fit(x1);
  Standardizer s2 = Standardizer::fit(x2);
  const Eigen::MatrixXd z1 = s1.apply(x1);
  const Eigen::MatrixXd z2 = s2.apply(x2);

  learners::TreeParams tp;
  tp.max_depth = options.tree_depth;
  auto tree = learners::DecisionTree::fit(z1, y, n_classes, tp);

  // Each class joins the leaf holding most of its samples; every leaf with a
  // class becomes a group.
  const std::size_t n_nodes = tree.nodes().size();
  std::vector<std::size_t> leaf(data.size());
  std::vector<std::vector<std::size_t>> per_class_leaf(n_classes, std::vector<std::size_t>(n_nodes, 0));
  for (std::size_t i = 0; i < data.size(); ++i) {
    leaf[i] = tree.leaf_of(z1.row(idx(i)));
    ++per_class_leaf[y[i]][leaf[i]];
  }
  std::vector<std::size_t> class_leaf(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c)
    class_leaf[c] = static_cast<std::size_t>(
        std::max_element(per_class_leaf[c].begin(), per_class_leaf[c].end()) - per_class_leaf[c].begin());

  std::map<std::size_t, std::size_t> group_of_leaf;
  for (std::size_t c = 0; c < n_classes; ++c) group_of_leaf.emplace(class_leaf[c], 0);
  std::size_t next = 0;
  for (auto& [node, g] : group_of_leaf) g = next++;
  std::vector<std::size_t> class_group(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) class_group[c] = group_of_leaf.at(class_leaf[c]);

  std::vector<std::size_t> leaf_group(n_nodes, 0);
  for (std::size_t node = 0; node < n_nodes; ++node) {
    if (!tree.nodes()[node].is_leaf()) continue;
    if (auto it = group_of_leaf.find(node); it != group_of_leaf.end()) {
      leaf_group[node] = it->second;
      continue;
    }
    std::vector<std::size_t> votes(group_of_leaf.size(), 0);
    for (std::size_t i = 0; i < data.size(); ++i)
      if (leaf[i] == node) ++votes[class_group[y[i]]];
    leaf_group[node] = static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }

  std::vector<MultiStageClassifier::Group> groups(group_of_leaf.size());
  for (std::size_t c = 0; c < n_classes; ++c) groups[class_group[c]].classes.push_back(c);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& grp = groups[g];
    std::vector<std::size_t> local(n_classes, 0);
    for (std::size_t j = 0; j < grp.classes.size(); ++j) local[grp.classes[j]] = j;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (class_group[y[i]] == g) rows.push_back(i);
    Eigen::MatrixXd xg(idx(rows.size()), z2.cols());
    Eigen::MatrixXd tg = Eigen::MatrixXd::Zero(idx(rows.size()), idx(grp.classes.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      xg.row(idx(r)) = z2.row(idx(rows[r]));
      tg(idx(r), idx(local[y[rows[r]]])) = 1.0;
    }
    std::vector<std::size_t> sizes{static_cast<std::size_t>(z2.cols())};
    sizes.insert(sizes.end(), options.hidden.begin(), options.hidden.end());
    sizes.push_back(grp.classes.size());
    grp.net = learners::Mlp(sizes, derive_seed(options.seed, {g, 1}));
    learners::MlpTrainOptions mo;
    mo.epochs = options.epochs;
    mo.batch_size = options.batch_size;
    mo.learning_rate = options.learning_rate;
    mo.seed = derive_seed(options.seed, {g, 2});
    learners::train_mlp(grp.net, xg, tg, mo);
  }
  return MultiStageClassifier(std::move(class_names), csi_width, std::move(s1), std::move(tree),
                              std::move(leaf_group), std::move(s2), std::move(groups));
}

std::pair<DeviceClass, double> identify(const MultiStageClassifier& c, const RfSignature& s) {
  const auto [id, score] = c.identify(s);
  return {DeviceClass{id, c.class_names()[id]}, score};
}

double profiler_rate(const MultiStageClassifier& c, std::span<const LabelledSignature> data) {
  ConfusionCounts counts(c.n_classes());
  for (const auto& d : data) counts.add(d.label, c.identify(d.signature).first);
  return identification_rate(counts);
}

std::vector<LabelledSignature> synthesize_corpus(std::span<const ProfiledDevice> devices, const ChannelModel& model,
                                                 std::size_t per_device, std::uint64_t seed) {
  std::vector<LabelledSignature> out;
  out.reserve(devices.size() * per_device);
  for (const auto& d : devices)
    for (std::size_t k = 0; k < per_device; ++k)
      out.push_back({synthesize_signature(d.identity, model, derive_seed(seed, {d.identity.device_id, k})), d.label,
                     d.identity.device_id});
  return out;
}

bool DefenseReport::orthogonal() const noexcept {
  return std::all_of(rounds.begin(), rounds.end(), [](const DefenseRound& r) { return r.clean_hash == r.attacked_hash; });
}

DefenseReport evaluate_defense(const MultiStageClassifier& c,
                               std::span<const std::pair<std::size_t, camouflage::Generator>> snapshots,
                               const DefenseScenario& scenario) {
  if (!scenario.traffic || scenario.traffic->empty()) throw ValidationError("defense scenario needs traffic rows");
  if (!scenario.traffic_victim) throw ValidationError("defense scenario needs a traffic identifier");
  if (scenario.devices.empty() || scenario.signatures_per_device == 0)
    throw ValidationError("defense scenario needs devices and signatures");

  std::vector<FeatureVector> xs;
  xs.reserve(scenario.traffic->size());
  for (const auto& r : scenario.traffic->rows()) xs.push_back(r.x);
  const auto labels = scenario.traffic->labels();

  DefenseReport report;
  for (const auto& [epoch, g] : snapshots) {
    DefenseRound round;
    round.epoch = epoch;
    const std::uint64_t round_seed = derive_seed(scenario.seed, {epoch});

    const auto clean = synthesize_corpus(scenario.devices, scenario.channel, scenario.signatures_per_device, round_seed);
    round.clean_rate = profiler_rate(c, clean);
    round.clean_hash = signature_hash(stream_of(clean));

    const auto manipulated = camouflage::manipulate_all(g, xs, derive_seed(round_seed, {1}));
    ConfusionCounts traffic(scenario.traffic->n_classes());
    for (std::size_t i = 0; i < manipulated.size(); ++i) traffic.add(labels[i], scenario.traffic_victim(manipulated[i]));
    round.traffic_rate = identification_rate(traffic);

    // Signatures depend only on the identities; the manipulated traffic has no path into them.
    const auto attacked = synthesize_corpus(scenario.devices, scenario.channel, scenario.signatures_per_device, round_seed);
    round.attacked_rate = profiler_rate(c, attacked);
    round.attacked_hash = signature_hash(stream_of(attacked));
    report.rounds.push_back(round);
  }
  return report;
}

std::string signatures_to_csv(std::span<const LabelledSignature> data, std::span<const std::string> class_names) {
  const std::size_t width = data.empty() ? 0 : data.front().signature.csi.size();
  std::string out = "device_id,class,amplitude_attenuation,phase_shift,frequency_offset,arrival_angle";
  for (std::size_t k = 0; k < width; ++k) out += fmt::format(",csi_{}", k);
  out += '\n';
  for (const auto& d : data) {
    if (d.label >= class_names.size()) throw ValidationError("signature label outside the class list");
    if (d.signature.csi.size() != width) throw ValidationError("signatures have different CSI widths");
    out += fmt::format("{},{}", d.device_id, class_names[d.label]);
    for (double v : d.signature.profiled()) out += fmt::format(",{}", v);
    for (double v : d.signature.csi) out += fmt::format(",{}", v);
    out += '\n';
  }
  return out;
}

std::vector<LabelledSignature> signatures_from_csv(const std::string& text, std::span<const std::string> class_names) {
  std::vector<std::string_view> lines;
  {
    std::string_view rest(text);
    while (!rest.empty()) {
      const auto nl = rest.find('\n');
      auto line = rest.substr(0, nl);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      lines.push_back(line);
      if (nl == std::string_view::npos) break;
      rest.remove_prefix(nl + 1);
    }
  }
  if (lines.empty() || lines.front().empty()) throw ParseError("signature CSV is empty", 1);
  const auto header = split(lines.front());
  static constexpr std::string_view fixed[] = {"device_id",        "class",         "amplitude_attenuation",
                                               "phase_shift",      "frequency_offset", "arrival_angle"};
  if (header.size() < std::size(fixed)) throw ParseError("signature CSV header is too short", 1);
  for (std::size_t i = 0; i < std::size(fixed); ++i)
    if (header[i] != fixed[i])
      throw ParseError(fmt::format("expected column '{}', found '{}'", fixed[i], header[i]), 1, i + 1);
  const std::size_t width = header.size() - std::size(fixed);
  for (std::size_t k = 0; k < width; ++k)
    if (header[std::size(fixed) + k] != fmt::format("csi_{}", k))
      throw ParseError(fmt::format("expected column 'csi_{}'", k), 1, std::size(fixed) + k + 1);

  std::vector<LabelledSignature> out;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    const auto cells = split(lines[ln]);
    if (cells.size() != header.size())
      throw ParseError(fmt::format("expected {} cells, found {}", header.size(), cells.size()), ln + 1);
    LabelledSignature s;
    {
      const auto& c = cells[0];
      auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), s.device_id);
      if (ec != std::errc{} || p != c.data() + c.size()) throw ParseError("bad device id", ln + 1, 1);
    }
    const auto it = std::find(class_names.begin(), class_names.end(), cells[1]);
    if (it == class_names.end()) throw ValidationError(fmt::format("line {}: unknown class '{}'", ln + 1, cells[1]));
    s.label = static_cast<ClassId>(it - class_names.begin());
    std::vector<double> values(cells.size() - 2);
    for (std::size_t j = 2; j < cells.size(); ++j) {
      const auto& c = cells[j];
      auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), values[j - 2]);
      if (ec != std::errc{} || p != c.data() + c.size() || !std::isfinite(values[j - 2]))
        throw ParseError(fmt::format("'{}' is not a finite number", c), ln + 1, j + 1);
    }
    s.signature.amplitude_attenuation = values[0];
    s.signature.phase_shift = values[1];
    s.signature.frequency_offset = values[2];
    s.signature.arrival_angle = values[3];
    s.signature.csi.assign(values.begin() + 4, values.end());
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace iotgan::profiler
