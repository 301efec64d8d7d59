#include "iotgan/synthetic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include <fmt/core.h>

#include "iotgan/error.hpp"
#include "iotgan/random.hpp"

namespace iotgan::harness {

namespace {

// Columns carrying the per-device binary code.
constexpr std::size_t kCodeColumns[] = {0, 7, 9, 10, 11, 12, 13, 21};
constexpr std::size_t kCodeBits = std::size(kCodeColumns);
constexpr std::size_t kTypeColumns[] = {1, 20};

double type_level(DeviceType t) {
  switch (t) {
    case DeviceType::Camera: return 0.75;
    case DeviceType::Hub: return 0.55;
    case DeviceType::Health: return 0.42;
    case DeviceType::Switch: return 0.22;
  }
  return 0.5;
}

// Code offsets of one device type: every pattern ordered by Hamming weight,
// bit order rotated by the type so single-bit neighbours differ between types.
std::vector<unsigned> type_patterns(std::size_t type) {
  std::vector<unsigned> p(1u << kCodeBits);
  for (unsigned i = 0; i < p.size(); ++i) p[i] = i;
  const auto rotated = [&](unsigned v) {
    const unsigned r = static_cast<unsigned>((2 * type) % kCodeBits);
    return ((v << r) | (v >> (kCodeBits - r))) & ((1u << kCodeBits) - 1);
  };
  std::stable_sort(p.begin(), p.end(), [](unsigned a, unsigned b) { return std::popcount(a) < std::popcount(b); });
  for (auto& v : p) v = rotated(v);
  return p;
}

}  // namespace

std::string_view to_string(DeviceType t) noexcept {
  switch (t) {
    case DeviceType::Camera: return "camera";
    case DeviceType::Hub: return "hub";
    case DeviceType::Switch: return "switch";
    case DeviceType::Health: return "health";
  }
  return "camera";
}

DeviceType parse_device_type(std::string_view name) {
  for (auto t : kDeviceTypes)
    if (to_string(t) == name) return t;
  throw ValidationError(fmt::format("unknown device type '{}'", name));
}

DeviceType device_type_of(std::string_view label) {
  const auto us = label.find('_');
  return parse_device_type(label.substr(0, us));
}

FeatureSchema default_schema() {
  std::vector<FeatureSpec> f = {
      {"svc_req_interval", "s", 0, 600, true},
      {"svc_volume", "bytes", 0, 5e6, true},
      {"svc_type_ntp", "", 0, 1, false},
      {"svc_type_dns", "", 0, 1, false},
      {"svc_type_storage", "", 0, 1, false},
      {"svc_type_api", "", 0, 1, false},
      {"svc_domain_bucket", "", 0, 15, false},
      {"active_sleep_cycle", "s", 0, 3600, true},
      {"local_port", "", 1024, 65535, true},
      {"remote_port", "", 0, 65535, true},
      {"pkt_size_mean", "bytes", 40, 1500, true},
      {"pkt_size_std", "bytes", 0, 700, true},
      {"pkt_interval_mean", "ms", 0, 2000, true},
      {"pkt_interval_std", "ms", 0, 1000, true},
      {"proto_tcp", "", 0, 1, false},
      {"proto_udp", "", 0, 1, false},
      {"proto_other", "", 0, 1, false},
      {"cipher_none", "", 0, 1, false},
      {"cipher_tls12", "", 0, 1, false},
      {"cipher_tls13", "", 0, 1, false},
      {"flow_bytes_per_s", "B/s", 0, 2e6, true},
      {"flow_pkt_count", "", 0, 5000, true},
      {"flow_duration", "s", 0, 600, true},
      {"burst_ratio", "", 0, 1, true},
  };
  return FeatureSchema(std::move(f));
}

std::vector<std::string> default_target_features() {
  return {"svc_req_interval",  "svc_volume",       "active_sleep_cycle", "remote_port",
          "pkt_size_mean",     "pkt_size_std",     "pkt_interval_mean",  "pkt_interval_std",
          "flow_bytes_per_s",  "flow_pkt_count",   "flow_duration",      "burst_ratio"};
}

std::vector<SyntheticProfile> default_profiles(const FeatureSchema& schema, std::uint64_t seed,
                                               const SyntheticOptions& options) {
  if (schema != default_schema()) throw ValidationError("default profiles are defined for the default schema only");
  if (options.n_classes < 2) throw ValidationError("need at least two classes");
  if (!(options.code_amplitude > 0.0 && options.code_amplitude < 0.5))
    throw ValidationError("code amplitude must be in (0, 0.5)");
  const std::size_t per_type_max = (options.n_classes + kDeviceTypes.size() - 1) / kDeviceTypes.size();
  if (per_type_max > (1u << kCodeBits)) throw ValidationError("too many classes for the device code");

  Rng rng(derive_seed(seed, {0}));
  std::uniform_int_distribution<unsigned> base_code(0, (1u << kCodeBits) - 1);
  unsigned bases[4];
  for (auto& b : bases) b = base_code(rng);
  std::uniform_real_distribution<double> jitter(-options.type_jitter, options.type_jitter);

  std::vector<SyntheticProfile> out;
  const std::size_t n = options.n_classes;
  std::size_t per_type_count[4] = {0, 0, 0, 0};
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t t = c * kDeviceTypes.size() / n;
    SyntheticProfile p;
    p.type = kDeviceTypes[t];
    p.label = fmt::format("{}_{:02}", to_string(p.type), ++per_type_count[t]);
    p.features.assign(schema.size(), FeatureDistribution{Family::Normal, 0.5, options.noise_spread});
    const unsigned code = bases[t] ^ type_patterns(t)[per_type_count[t] - 1];
    for (std::size_t j = 0; j < kCodeBits; ++j) {
      const double sign = (code >> j) & 1u ? 1.0 : -1.0;
      p.features[kCodeColumns[j]] = {Family::Normal, 0.5 + sign * options.code_amplitude, options.class_spread};
    }
    for (auto col : kTypeColumns)
      p.features[col] = {Family::Normal, type_level(p.type) + jitter(rng), options.class_spread};
    p.features[8] = {Family::Uniform, 0.5, 0.5};
    p.features[6] = {Family::Integer, 0.5, 0.0};
    p.one_hot = {{{2, 3, 4, 5}, {1, 1, 1, 1}}, {{14, 15, 16}, {1, 1, 1}}, {{17, 18, 19}, {1, 1, 1}}};
    for (const auto& g : p.one_hot)
      for (auto col : g.columns) p.features[col] = {Family::OneHot, 0.0, 0.0};
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> inseparable_pairs(const std::vector<SyntheticProfile>& profiles) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t a = 0; a < profiles.size(); ++a)
    for (std::size_t b = a + 1; b < profiles.size(); ++b) {
      const auto& fa = profiles[a].features;
      const auto& fb = profiles[b].features;
      bool separated = false;
      for (std::size_t i = 0; i < std::min(fa.size(), fb.size()) && !separated; ++i) {
        if (fa[i].family != Family::Normal || fb[i].family != Family::Normal) continue;
        separated = std::abs(fa[i].mean - fb[i].mean) > 2.0 * std::max(fa[i].spread, fb[i].spread);
      }
      if (!separated) out.emplace_back(a, b);
    }
  return out;
}

Dataset generate_dataset(const FeatureSchema& schema, const std::vector<SyntheticProfile>& profiles,
                         std::size_t rows_per_class, std::uint64_t seed, const Warning& warn) {
  if (profiles.size() < 2) throw ValidationError("need at least two profiles");
  std::set<std::string> labels;
  for (const auto& p : profiles) {
    if (!labels.insert(p.label).second) throw ValidationError(fmt::format("duplicate profile label '{}'", p.label));
    if (p.features.size() != schema.size())
      throw ValidationError(fmt::format("profile '{}' has {} features, schema has {}", p.label, p.features.size(),
                                        schema.size()));
    std::vector<int> covered(schema.size(), 0);
    for (const auto& g : p.one_hot) {
      if (g.columns.empty() || g.columns.size() != g.weights.size())
        throw ValidationError(fmt::format("profile '{}' has a malformed one-hot group", p.label));
      for (auto col : g.columns) {
        if (col >= schema.size() || p.features[col].family != Family::OneHot)
          throw ValidationError(fmt::format("profile '{}' one-hot column {} is not marked one-hot", p.label, col));
        ++covered[col];
      }
    }
    for (std::size_t i = 0; i < schema.size(); ++i) {
      const auto& f = p.features[i];
      if (f.family == Family::OneHot && covered[i] != 1)
        throw ValidationError(fmt::format("profile '{}' column {} must belong to exactly one group", p.label, i));
      if (!std::isfinite(f.mean) || !std::isfinite(f.spread) || f.spread < 0.0)
        throw ValidationError(fmt::format("profile '{}' has an invalid distribution for column {}", p.label, i));
    }
  }
  if (warn)
    for (auto [a, b] : inseparable_pairs(profiles))
      warn(fmt::format("profiles '{}' and '{}' are not separable at their spread", profiles[a].label,
                       profiles[b].label));

  std::vector<std::string> names;
  for (const auto& p : profiles) names.push_back(p.label);
  std::vector<Sample> rows;
  rows.reserve(profiles.size() * rows_per_class);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (std::size_t c = 0; c < profiles.size(); ++c) {
    const auto& p = profiles[c];
    Rng rng(derive_seed(seed, {c}));
    for (std::size_t r = 0; r < rows_per_class; ++r) {
      Sample s;
      s.label = c;
      s.x.values.assign(schema.size(), 0.0);
      for (std::size_t i = 0; i < schema.size(); ++i) {
        const auto& f = p.features[i];
        double u = 0.0;
        switch (f.family) {
          case Family::Normal: u = f.mean + f.spread * gauss(rng); break;
          case Family::Uniform: u = f.mean + f.spread * unit(rng); break;
          case Family::Integer: {
            const auto lo = static_cast<long long>(std::ceil(schema[i].min));
            const auto hi = static_cast<long long>(std::floor(schema[i].max));
            std::uniform_int_distribution<long long> d(lo, std::max(lo, hi));
            s.x[i] = static_cast<double>(d(rng));
            continue;
          }
          case Family::OneHot: continue;
        }
        s.x[i] = schema.denormalize(i, std::clamp(u, 0.0, 1.0));
      }
      for (const auto& g : p.one_hot) {
        std::discrete_distribution<std::size_t> pick(g.weights.begin(), g.weights.end());
        s.x[g.columns[pick(rng)]] = 1.0;
      }
      rows.push_back(std::move(s));
    }
  }
  return Dataset(schema, std::move(names), std::move(rows), seed);
}

}  // namespace iotgan::harness
