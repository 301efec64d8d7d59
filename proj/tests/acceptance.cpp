// Acceptance suite: runs the default benchmark twice and checks the ten
// acceptance criteria, one PASS/FAIL line each. Exit status 1 if any fails.
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "iotgan/camouflage.hpp"
#include "iotgan/experiment.hpp"
#include "iotgan/io.hpp"
#include "iotgan/learners/classifier.hpp"
#include "iotgan/random.hpp"
#include "iotgan/substitute.hpp"

using namespace iotgan;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void verdict(int n, bool ok, const std::string& detail) {
  fmt::print("{} criterion {:>2}: {}\n", ok ? "PASS" : "FAIL", n, detail);
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string kind_name(learners::ClassifierKind k) { return std::string(learners::to_string(k)); }

void clean_identification(const harness::ExperimentResult& r) {
  bool ok = r.kinds.size() == std::size(learners::kAllKinds);
  std::string detail;
  for (const auto& k : r.kinds) {
    ok = ok && k.target_test_rate >= 0.90;
    detail += fmt::format("{} {:.4f} ", kind_name(k.kind), k.target_test_rate);
  }
  verdict(1, ok, detail + "(floor 0.90)");
}

void substitute_fidelity(const harness::ExperimentResult& r) {
  bool ok = !r.kinds.empty();
  std::string detail;
  for (const auto& k : r.kinds) {
    const double gap = std::abs(k.substitute_test_agreement - k.target_test_rate);
    ok = ok && gap <= 0.05 && k.substitute_curve.size() <= 60;
    detail += fmt::format("{} gap {:.4f} in {} epochs; ", kind_name(k.kind), gap, k.substitute_curve.size());
  }
  verdict(2, ok, detail + "limit 0.05, 60 epochs");
}

void substitute_convergence(const harness::ExperimentResult& r) {
  bool ok = !r.kinds.empty();
  std::string detail;
  for (const auto& k : r.kinds) {
    const auto& c = k.substitute_curve;
    if (c.size() != 60) {
      ok = false;
      detail += fmt::format("{} has {} epochs; ", kind_name(k.kind), c.size());
      continue;
    }
    const auto [lo, hi] = std::minmax_element(c.end() - 10, c.end());
    ok = ok && *hi - *lo < 0.01;
    detail += fmt::format("{} {:.4f}; ", kind_name(k.kind), *hi - *lo);
  }
  verdict(3, ok, "change over last 10 epochs: " + detail + "limit 0.01");
}

void misidentification(const harness::ExperimentResult& r) {
  bool ok = !r.kinds.empty();
  std::string detail;
  for (const auto& k : r.kinds) {
    ok = ok && k.attacked && k.attacked_test_rate <= 0.10;
    detail += fmt::format("{} {:.4f} (substitute {:.4f}, gap {:+.4f}); ", kind_name(k.kind), k.attacked_test_rate,
                          k.substitute_attacked_rate, k.attacked_test_rate - k.substitute_attacked_rate);
  }
  verdict(4, ok, detail + "limit 0.10");
}

void spoofing(const harness::ExperimentResult& r) {
  using T = harness::DeviceType;
  const std::set<std::pair<T, T>> compatible = {{T::Camera, T::Hub},   {T::Hub, T::Camera},    {T::Camera, T::Health},
                                                {T::Health, T::Camera}, {T::Hub, T::Health},    {T::Health, T::Hub},
                                                {T::Switch, T::Health}, {T::Health, T::Switch}};
  bool ok = r.spoofing.size() == r.kinds.size() * harness::spoof_pairs().size() && !r.spoofing.empty();
  double worst = 1.0;
  std::string worst_at, unscored;
  for (const auto& s : r.spoofing) {
    const std::string name = fmt::format("{} {}=>{}", kind_name(s.kind), harness::to_string(s.source),
                                         harness::to_string(s.target));
    if (compatible.count({s.source, s.target})) {
      if (s.rate < worst) {
        worst = s.rate;
        worst_at = name;
      }
      if (s.rate < 0.80) {
        ok = false;
        fmt::print("     below 0.80: {} {:.4f}\n", name, s.rate);
      }
    } else {
      unscored += fmt::format("{} {:.4f}; ", name, s.rate);
    }
  }
  verdict(5, ok, fmt::format("lowest compatible pair {} at {:.4f} (floor 0.80)", worst_at, worst));
  fmt::print("     pairs outside the criterion, no threshold: {}\n", unscored);
}

FeatureVector random_vector(const FeatureSchema& schema, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> edge(0, 9);
  FeatureVector x{std::vector<double>(schema.size())};
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const int e = edge(rng);
    const double t = e == 0 ? 0.0 : e == 1 ? 1.0 : u(rng);
    x[i] = schema[i].min + t * schema[i].width();
  }
  return x;
}

void functionality_preservation(const harness::ExperimentResult& r, const harness::PreparedData& data) {
  constexpr std::size_t kTotal = 100000;
  const auto& schema = data.schema;
  const auto mask = schema.mutable_mask();
  if (r.generators.empty()) {
    verdict(6, false, "no trained generators");
    return;
  }
  const std::size_t per = kTotal / r.generators.size();
  Rng rng(derive_seed(r.config.seed, {606}));
  std::size_t checked = 0, violations = 0;
  for (std::size_t gi = 0; gi < r.generators.size(); ++gi) {
    const auto& g = r.generators[gi];
    const std::size_t n = gi + 1 == r.generators.size() ? kTotal - checked : per;
    std::vector<FeatureVector> xs;
    xs.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      xs.push_back(i % 2 == 0 ? data.test.rows()[(i / 2) % data.test.size()].x : random_vector(schema, rng));
    const auto out = camouflage::manipulate_all(g, xs, derive_seed(r.config.seed, {607, gi}));
    for (std::size_t i = 0; i < n; ++i) {
      bool bad = out[i].size() != schema.size();
      for (std::size_t c = 0; c < schema.size() && !bad; ++c) {
        if (!mask[c] && std::bit_cast<std::uint64_t>(out[i][c]) != std::bit_cast<std::uint64_t>(xs[i][c])) bad = true;
        if (!(out[i][c] >= schema[c].min && out[i][c] <= schema[c].max)) bad = true;
      }
      violations += bad;
    }
    checked += n;
  }
  verdict(6, checked == kTotal && violations == 0,
          fmt::format("{} violations over {} manipulated vectors from {} generators", violations, checked,
                      r.generators.size()));
}

void feature_selection(const harness::ExperimentResult& r, std::size_t k) {
  bool ok = !r.kinds.empty();
  std::string detail;
  for (const auto& kr : r.kinds) {
    const std::size_t l = kr.selected_features.size();
    const auto it = std::find_if(kr.scan.begin(), kr.scan.end(), [&](const auto& p) { return p.subset_size == l; });
    const bool found = it != kr.scan.end();
    const double drop = found ? kr.full_pool_agreement - it->agreement : 1.0;
    ok = ok && found && 2 * l <= k && drop <= 0.02;
    detail += fmt::format("{} L={} drop {:.4f}; ", kind_name(kr.kind), l, drop);
    for (std::size_t i = 0; i < kr.scan.size(); ++i) {
      const auto& p = kr.scan[i];
      if (p.gain && !std::isfinite(*p.gain)) ok = false;
      if (i == 0 && !p.undefined()) ok = false;
    }
  }

  // Guard over adversarial inputs: zeros, equal overheads, non-finite values, extremes.
  const double specials[] = {0.0,
                             -0.0,
                             1.0,
                             -1.0,
                             1e-300,
                             std::numeric_limits<double>::denorm_min(),
                             std::numeric_limits<double>::max(),
                             std::numeric_limits<double>::lowest(),
                             std::numeric_limits<double>::infinity(),
                             -std::numeric_limits<double>::infinity(),
                             std::numeric_limits<double>::quiet_NaN()};
  Rng rng(derive_seed(r.config.seed, {707}));
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_int_distribution<std::size_t> pick(0, std::size(specials) * 2 - 1);
  std::size_t bad = 0, defined = 0, calls = 0;
  for (int i = 0; i < 200000; ++i) {
    double v[4];
    for (auto& x : v) {
      const std::size_t p = pick(rng);
      x = p < std::size(specials) ? specials[p] : u(rng);
    }
    if (i % 4 == 0) v[3] = v[2];
    const auto g = substitute::performance_gain(v[0], v[1], v[2], v[3]);
    ++calls;
    if (g) {
      ++defined;
      bad += !std::isfinite(*g);
    }
  }
  ok = ok && bad == 0;
  verdict(7, ok, detail + fmt::format("guard: {} non-finite results over {} adversarial calls ({} defined)", bad, calls, defined));
}

void defense(const harness::ExperimentResult& r) {
  if (!r.defense || r.defense->rounds.empty()) {
    verdict(8, false, "no defense report");
    return;
  }
  bool ok = r.profiler_test_rate >= 0.95 && r.defense->orthogonal();
  double worst_clean = 1.0, worst_gap = 0.0;
  for (const auto& round : r.defense->rounds) {
    worst_clean = std::min(worst_clean, round.clean_rate);
    worst_gap = std::max(worst_gap, round.clean_rate - round.attacked_rate);
    ok = ok && round.clean_rate >= 0.95 && round.clean_rate - round.attacked_rate <= 0.05 &&
         round.clean_hash == round.attacked_hash;
  }
  verdict(8, ok,
          fmt::format("profiler test {:.4f}, lowest clean {:.4f}, largest attack drop {:.4f} over {} rounds, hashes {}",
                      r.profiler_test_rate, worst_clean, worst_gap, r.defense->rounds.size(),
                      r.defense->orthogonal() ? "equal" : "differ"));
}

double relative_error(double a, double b) { return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)}); }

void numerical_core(const harness::ExperimentConfig& base) {
  Rng rng(derive_seed(base.seed, {909}));
  std::uniform_int_distribution<std::size_t> width(2, 6), depth(1, 2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_param = 0.0, worst_input = 0.0;
  const double h = 1e-6;
  for (int net_i = 0; net_i < 20; ++net_i) {
    std::vector<std::size_t> sizes{width(rng)};
    const std::size_t hidden = depth(rng);
    for (std::size_t i = 0; i < hidden; ++i) sizes.push_back(width(rng) + 2);
    sizes.push_back(width(rng));
    learners::Mlp net(sizes, derive_seed(base.seed, {910, static_cast<std::uint64_t>(net_i)}));
    const Eigen::Index n = 5;
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(sizes.front()));
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    std::vector<std::size_t> labels;
    for (Eigen::Index i = 0; i < n; ++i) labels.push_back(static_cast<std::size_t>(i) % sizes.back());
    const Eigen::MatrixXd t = learners::one_hot(labels, sizes.back());

    const auto lg = learners::mlp_loss_and_gradients(net, x, t);
    const auto loss = [&](const learners::Mlp& m, const Eigen::MatrixXd& in) {
      return learners::bce_from_logits(m.logits(in), t);
    };
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      for (Eigen::Index i = 0; i < net.weights(l).size(); ++i) {
        learners::Mlp p = net, m = net;
        p.weights(l).data()[i] += h;
        m.weights(l).data()[i] -= h;
        worst_param = std::max(worst_param, relative_error((loss(p, x) - loss(m, x)) / (2 * h),
                                                           lg.gradients.weights[l].data()[i]));
      }
      for (Eigen::Index i = 0; i < net.bias(l).size(); ++i) {
        learners::Mlp p = net, m = net;
        p.bias(l)[i] += h;
        m.bias(l)[i] -= h;
        worst_param =
            std::max(worst_param, relative_error((loss(p, x) - loss(m, x)) / (2 * h), lg.gradients.biases[l][i]));
      }
    }
    const Eigen::MatrixXd d_logits = (learners::sigmoid(net.logits(x)) - t) / static_cast<double>(n);
    const Eigen::MatrixXd gx = learners::mlp_input_gradient_from_logits(net, x, d_logits);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Eigen::MatrixXd p = x, m = x;
      p.data()[i] += h;
      m.data()[i] -= h;
      worst_input = std::max(worst_input, relative_error((loss(net, p) - loss(net, m)) / (2 * h), gx.data()[i]));
    }
  }

  // predict == argmax of scores, ties to the lowest class, on random in-range vectors.
  harness::ExperimentConfig small = base;
  small.rows_per_class = 40;
  const auto data = harness::prepare_data(small);
  std::vector<std::size_t> cols;
  for (const auto& name : harness::default_target_features()) cols.push_back(*data.schema.index_of(name));
  const auto target_schema = data.schema.subset(cols);
  const auto train = data.train.project(target_schema);
  std::size_t mismatches = 0, vectors = 0;
  for (auto kind : learners::kAllKinds) {
    learners::Hyperparams hp;
    hp.seed = derive_seed(base.seed, {911, static_cast<std::uint64_t>(kind)});
    const auto model = learners::fit(kind, train, hp);
    for (int i = 0; i < 1000; ++i) {
      const auto x = random_vector(target_schema, rng);
      mismatches += learners::predict(model, x) != learners::argmax_lowest(learners::predict_scores(model, x));
      ++vectors;
    }
  }
  verdict(9, worst_param < 1e-4 && worst_input < 1e-4 && mismatches == 0,
          fmt::format("20 nets: worst parameter rel. error {:.2e}, worst input rel. error {:.2e} (limit 1e-4); "
                      "{} predict/argmax mismatches over {} vectors",
                      worst_param, worst_input, mismatches, vectors));
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

// scan.csv carries wall-clock overheads; only its deterministic columns are compared.
std::string deterministic_scan(const std::string& text) {
  std::string out;
  for (const auto& line : lines_of(text)) {
    std::vector<std::string> cells;
    std::istringstream in(line);
    for (std::string c; std::getline(in, c, ',');) cells.push_back(c);
    if (cells.size() >= 3)
      out += cells[0] + "," + cells[1] + "," + cells[2] + "\n";
    else
      out += line + "\n";
  }
  return out;
}

void reproducibility(const fs::path& first, const fs::path& second) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(first))
    if (e.path().extension() == ".csv") names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  bool ok = names.size() >= 6;
  std::string detail;
  for (const auto& n : names) {
    if (!fs::exists(second / n)) {
      ok = false;
      detail += n + " missing; ";
      continue;
    }
    std::string a = read_file(first / n), b = read_file(second / n);
    if (n == "scan.csv") {
      a = deterministic_scan(a);
      b = deterministic_scan(b);
    }
    const bool same = a == b;
    ok = ok && same;
    detail += fmt::format("{} {}; ", n, same ? "identical" : "DIFFERS");
  }
  verdict(10, ok, detail + "(scan.csv compared on model, L and agreement)");
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "iotgan_acceptance";
  fs::create_directories(work);
  const fs::path first = work / "run1", second = work / "run2";
  fs::remove_all(first);
  fs::remove_all(second);

  harness::ExperimentConfig cfg;
  cfg.output_dir = first.string();
  const auto progress = [](std::string_view msg) { fmt::print("  .. {}\n", msg); };
  fmt::print("running the default benchmark into {}\n", first.string());
  harness::ExperimentResult result;
  try {
    result = harness::run_experiment(cfg, progress);
  } catch (const std::exception& e) {
    fmt::print("FAIL pipeline: {}\n", e.what());
    return 1;
  }
  const auto data = harness::prepare_data(cfg);

  clean_identification(result);
  substitute_fidelity(result);
  substitute_convergence(result);
  misidentification(result);
  spoofing(result);
  functionality_preservation(result, data);
  feature_selection(result, data.schema.size());
  defense(result);
  numerical_core(cfg);

  fmt::print("re-running from {}\n", (first / "manifest.txt").string());
  try {
    auto again = harness::load_manifest(first / "manifest.txt");
    again.output_dir = second.string();
    harness::run_experiment(again, progress);
    reproducibility(first, second);
  } catch (const std::exception& e) {
    verdict(10, false, fmt::format("second run failed: {}", e.what()));
  }

  fmt::print("{} of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
