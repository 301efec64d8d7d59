#include <memory>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "iotgan/camouflage.hpp"
#include "iotgan/experiment.hpp"
#include "iotgan/learners/classifier.hpp"
#include "iotgan/learners/mlp.hpp"
#include "iotgan/random.hpp"
#include "iotgan/substitute.hpp"

using namespace iotgan;

namespace {

const harness::PreparedData& small_data() {
  static const harness::PreparedData data = [] {
    harness::ExperimentConfig cfg;
    cfg.rows_per_class = 60;
    return harness::prepare_data(cfg);
  }();
  return data;
}

std::vector<FeatureVector> test_vectors() {
  std::vector<FeatureVector> xs;
  for (const auto& r : small_data().test.rows()) xs.push_back(r.x);
  return xs;
}

void BM_MlpForward(benchmark::State& state) {
  const auto batch = state.range(0);
  learners::Mlp net({24, 64, 64, 28}, 1);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(batch, 24);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_MlpForward)->Arg(1)->Arg(32)->Arg(1024);

void BM_MlpLossAndGradients(benchmark::State& state) {
  learners::Mlp net({24, 64, 64, 28}, 1);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(32, 24);
  std::vector<std::size_t> labels(32);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 28;
  const Eigen::MatrixXd t = learners::one_hot(labels, 28);
  for (auto _ : state) benchmark::DoNotOptimize(learners::mlp_loss_and_gradients(net, x, t));
}
BENCHMARK(BM_MlpLossAndGradients);

void BM_ClassifierPredict(benchmark::State& state) {
  const auto kind = learners::kAllKinds[state.range(0)];
  const auto& data = small_data();
  learners::Hyperparams hp;
  hp.seed = 3;
  const auto model = learners::fit(kind, data.train, hp);
  const auto xs = test_vectors();
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(learners::predict(model, xs[i++ % xs.size()]));
  state.SetLabel(std::string(learners::to_string(kind)));
}
BENCHMARK(BM_ClassifierPredict)->DenseRange(0, std::size(learners::kAllKinds) - 1);

void BM_GeneratorManipulate(benchmark::State& state) {
  const auto& data = small_data();
  camouflage::GeneratorOptions go;
  go.seed = 5;
  camouflage::Generator g(data.schema, go);
  Rng rng(9);
  std::normal_distribution<double> n(0.0, 0.5);
  for (std::size_t l = 0; l < g.net().layer_count(); ++l)
    for (Eigen::Index i = 0; i < g.net().weights(l).size(); ++i) g.net().weights(l).data()[i] = n(rng);
  const auto xs = test_vectors();
  for (auto _ : state) benchmark::DoNotOptimize(camouflage::manipulate_all(g, xs, 11));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(xs.size()));
}
BENCHMARK(BM_GeneratorManipulate);

void BM_PerformanceGain(benchmark::State& state) {
  Rng rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(4096);
  for (auto& x : v) x = u(rng);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(substitute::performance_gain(v[i % 4096], v[(i + 1) % 4096], v[(i + 2) % 4096], v[(i + 3) % 4096]));
    ++i;
  }
}
BENCHMARK(BM_PerformanceGain);

}  // namespace

BENCHMARK_MAIN();
