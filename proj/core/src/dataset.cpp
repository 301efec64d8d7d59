#include "iotgan/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "iotgan/error.hpp"
#include "iotgan/random.hpp"

namespace iotgan {

Dataset::Dataset(FeatureSchema schema, std::vector<std::string> class_names, std::vector<Sample> rows,
                 std::uint64_t split_seed)
    : schema_(std::move(schema)),
      class_names_(std::move(class_names)),
      rows_(std::move(rows)),
      split_seed_(split_seed) {
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const auto& s = rows_[r];
    if (s.x.size() != schema_.size())
      throw ValidationError(fmt::format("row {} has {} values, schema expects {}", r, s.x.size(),
                                        schema_.size()));
    if (s.label >= class_names_.size())
      throw ValidationError(
          fmt::format("row {} has class id {} but only {} classes exist", r, s.label, class_names_.size()));
    if (!schema_.contains(s.x)) {
      try {
        schema_.check(s.x);
      } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("row {}: {}", r, e.what()));
      }
    }
  }
}

DeviceClass Dataset::device_class(ClassId id) const {
  if (id >= class_names_.size()) throw ValidationError(fmt::format("class id {} out of range", id));
  return DeviceClass{id, class_names_[id]};
}

std::vector<std::size_t> Dataset::class_histogram() const {
  std::vector<std::size_t> h(class_names_.size(), 0);
  for (const auto& s : rows_) ++h[s.label];
  return h;
}

std::size_t Dataset::distinct_labels() const {
  auto h = class_histogram();
  return static_cast<std::size_t>(std::count_if(h.begin(), h.end(), [](auto c) { return c > 0; }));
}

Eigen::MatrixXd Dataset::normalized_matrix() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows_.size()), static_cast<Eigen::Index>(schema_.size()));
  for (std::size_t r = 0; r < rows_.size(); ++r)
    for (std::size_t c = 0; c < schema_.size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = schema_.normalize(c, rows_[r].x[c]);
  return m;
}

std::vector<ClassId> Dataset::labels() const {
  std::vector<ClassId> out;
  out.reserve(rows_.size());
  for (const auto& s : rows_) out.push_back(s.label);
  return out;
}

Dataset Dataset::select(const std::vector<std::size_t>& indices) const {
  std::vector<Sample> picked;
  picked.reserve(indices.size());
  for (auto i : indices) picked.push_back(rows_.at(i));
  Dataset out;
  out.schema_ = schema_;
  out.class_names_ = class_names_;
  out.rows_ = std::move(picked);
  out.split_seed_ = split_seed_;
  return out;
}

Dataset Dataset::project(const FeatureSchema& target_schema) const {
  const auto idx = schema_.indices_of(target_schema);
  std::vector<Sample> projected;
  projected.reserve(rows_.size());
  for (const auto& s : rows_) projected.push_back(Sample{FeatureSchema::project(s.x, idx), s.label});
  return Dataset(target_schema, class_names_, std::move(projected), split_seed_);
}

SplitIndices stratified_split_indices(const std::vector<ClassId>& labels, std::size_t n_classes,
                                      double train_fraction, std::uint64_t seed, bool singletons_to_train) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ValidationError(fmt::format("train fraction {} not in (0, 1)", train_fraction));
  if (labels.empty()) throw StratificationError("cannot split an empty dataset");

  std::vector<std::vector<std::size_t>> by_class(n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= n_classes) throw ValidationError(fmt::format("label {} >= {}", labels[i], n_classes));
    by_class[labels[i]].push_back(i);
  }

  SplitIndices out;
  std::size_t splittable = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (by_class[c].size() == 1) {
      if (!singletons_to_train)
        throw StratificationError(
            fmt::format("class {} has a single row; stratified split needs at least 2", c));
      out.train.push_back(by_class[c].front());
      by_class[c].clear();
    }
    splittable += by_class[c].size();
  }

  // Largest-remainder allocation of the global train count across classes.
  const auto total_train =
      static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(splittable)));
  std::vector<std::size_t> quota(n_classes, 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t allocated = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    const auto n = by_class[c].size();
    if (n == 0) continue;
    const double exact = train_fraction * static_cast<double>(n);
    quota[c] = std::clamp<std::size_t>(static_cast<std::size_t>(std::floor(exact)), 1, n - 1);
    allocated += quota[c];
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [rem, c] : remainders) {
    if (allocated >= total_train) break;
    if (rem > 0.0 && quota[c] + 1 <= by_class[c].size() - 1) {
      ++quota[c];
      ++allocated;
    }
  }

  for (std::size_t c = 0; c < n_classes; ++c) {
    auto idx = by_class[c];
    if (idx.empty()) continue;
    Rng rng(derive_seed(seed, {c}));
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto cut = idx.begin() + static_cast<std::ptrdiff_t>(quota[c]);
    out.train.insert(out.train.end(), idx.begin(), cut);
    out.test.insert(out.test.end(), cut, idx.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (ds.empty()) throw StratificationError("cannot split an empty dataset");
  std::vector<std::size_t> counts = ds.class_histogram();
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] == 1)
      throw StratificationError(fmt::format("class '{}' has 1 row; stratified split needs at least 2",
                                            ds.class_names()[c]));
  const auto split = stratified_split_indices(ds.labels(), ds.n_classes(), train_fraction, seed);
  auto with_seed = [&](const std::vector<std::size_t>& idx) {
    std::vector<Sample> rows;
    rows.reserve(idx.size());
    for (auto i : idx) rows.push_back(ds.rows()[i]);
    return Dataset(ds.schema(), ds.class_names(), std::move(rows), seed);
  };
  return {with_seed(split.train), with_seed(split.test)};
}

}  // namespace iotgan
